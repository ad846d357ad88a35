//! Seeded test fields with prescribed regularity.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{arg, Result};
use crate::fft;
use crate::grid::{Field, Grid};
use crate::spectral::partition::DyadicPartition;

const SYNTH_DOMAIN: u64 = 0x5b35_0f1e_1d00_0001;
const BAND_DOMAIN: u64 = 0x5b35_0f1e_1d00_0002;

fn rng_for(domain: u64, seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(domain ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Lacunary series `sum_j 2^{-j beta} a_j cos(2^j omega_j . x + theta_j)`, `j = 0..=j_max`.
///
/// Each shell carries exactly one plane wave placed where `psi_j = 1`, so
/// `2^{j beta} ||R_j f||_inf = a_j` with `a_j` drawn from `[1/2, 1]`.
pub fn synth_besov_field(beta: f64, seed: u64, grid: &Grid) -> Result<Field> {
    if !(beta > -1.0 && beta < 2.0) {
        return arg(format!("synthetic regularity must lie in (-1, 2), got {beta}"));
    }
    let part = DyadicPartition::new(grid)?;
    let mut rng = rng_for(SYNTH_DOMAIN, seed);
    let k0 = grid.fundamental();
    let mut waves = Vec::new();
    for j in 0..=part.j_max() {
        let amp: f64 = rng.random_range(0.5..=1.0);
        let theta: f64 = rng.random_range(0.0..2.0 * PI);
        let axis = if grid.dim() == 2 { rng.random_range(0..2usize) } else { 0 };
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let m = (2f64.powi(j) / k0).floor();
        if m < 1.0 {
            continue;
        }
        let k = m * k0;
        if part.psi(j, k) < 1.0 {
            continue;
        }
        waves.push((axis, sign * k, amp * 2f64.powf(-beta * j as f64), theta));
    }
    Ok(Field::from_fn(*grid, |x| {
        waves.iter().map(|&(axis, k, a, th)| a * (k * x[axis] + th).cos()).sum()
    }))
}

/// Random real field band-limited to the retained band, with Fourier
/// amplitudes decaying like `(1 + |xi|)^{-decay}` and unit sup norm.
pub fn random_band_limited(grid: &Grid, seed: u64, decay: f64) -> Field {
    let mut rng = rng_for(BAND_DOMAIN, seed);
    let noise: Vec<f64> = (0..grid.len()).map(|_| rng.sample(StandardNormal)).collect();
    let mut s = fft::forward(grid, &noise);
    for (f, z) in s.iter_mut().enumerate() {
        if grid.is_retained(f) {
            *z *= (1.0 + grid.wavenumber(f)).powf(-decay);
        } else {
            *z = Default::default();
        }
    }
    let values = fft::inverse(grid, &s);
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    Field::scalar(*grid, values.into_iter().map(|v| v / sup).collect()).expect("grid-sized")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::besov::{besov_norm, shell_norms, BesovIndex};
    use crate::spectral::ops::derivative;

    #[test]
    fn per_shell_amplitudes() {
        let g = Grid::unit_1d(1024).unwrap();
        let p = DyadicPartition::new(&g).unwrap();
        let f = synth_besov_field(0.5, 7, &g).unwrap();
        let norms = shell_norms(&f, f64::INFINITY, &p).unwrap();
        for j in 0..=p.j_max() {
            let v = 2f64.powf(0.5 * j as f64) * norms[(j + 1) as usize];
            assert!((0.25..=4.0).contains(&v), "shell {j}: {v}");
        }
        let c = besov_norm(&f, BesovIndex::holder(0.5), &p).unwrap();
        assert!((0.25..=4.0).contains(&c));
    }

    #[test]
    fn derivative_drops_one_order() {
        let g = Grid::unit_1d(1024).unwrap();
        let p = DyadicPartition::new(&g).unwrap();
        let f = synth_besov_field(1.5, 3, &g).unwrap();
        let df = derivative(&f, 0).unwrap();
        let norms = shell_norms(&df, f64::INFINITY, &p).unwrap();
        for j in 0..=p.j_max() {
            let v = 2f64.powf(0.5 * j as f64) * norms[(j + 1) as usize];
            assert!((0.25..=4.0).contains(&v), "shell {j}: {v}");
        }
    }

    #[test]
    fn deterministic_and_2d() {
        let g = Grid::new(2, 64, 2.0 * PI).unwrap();
        let a = synth_besov_field(0.2, 11, &g).unwrap();
        let b = synth_besov_field(0.2, 11, &g).unwrap();
        assert_eq!(a, b);
        let p = DyadicPartition::new(&g).unwrap();
        let c = besov_norm(&a, BesovIndex::holder(0.2), &p).unwrap();
        assert!((0.25..=4.0).contains(&c), "{c}");
        assert!(synth_besov_field(2.0, 1, &g).is_err());
    }

    #[test]
    fn band_limited_fields_stay_in_band() {
        let g = Grid::unit_1d(128).unwrap();
        let f = random_band_limited(&g, 5, 0.5);
        let s = fft::forward(&g, f.values());
        for (m, z) in s.iter().enumerate() {
            if !g.is_retained(m) {
                assert!(z.norm() < 1e-10);
            }
        }
        assert!((f.sup_norm() - 1.0).abs() < 1e-15);
    }
}
