//! Empirical densities: cloud-in-cell deposit followed by Gaussian smoothing.

use rayon::prelude::*;

use crate::error::{arg, Result};
use crate::fft;
use crate::grid::{Field, Grid};
use crate::particles::ensemble::Ensemble;

// fixed-point resolution of one deposit weight along one axis
const WEIGHT_BITS: u32 = 32;
const WEIGHT_ONE: u64 = 1 << WEIGHT_BITS;
const CHUNK: usize = 4096;

/// Lower node and fixed-point weight of that node along one axis.
fn axis_weight(grid: &Grid, x: f64) -> (usize, u64) {
    let n = grid.points_per_axis();
    let u = (x + 0.5 * grid.side_length()) / grid.spacing();
    let i0 = u.floor();
    let frac = u - i0;
    let q = ((1.0 - frac) * WEIGHT_ONE as f64).round() as u64;
    ((i0 as i64).rem_euclid(n as i64) as usize, q.min(WEIGHT_ONE))
}

/// Linear-interpolation deposit; entry `i` is the fraction of particles at node `i`.
/// Integer accumulation makes the result independent of summation order.
pub fn deposit(ens: &Ensemble, grid: &Grid) -> Vec<f64> {
    let d = grid.dim();
    let n = grid.points_per_axis();
    let len = grid.len();
    let acc = ens
        .positions()
        .par_chunks(CHUNK * d)
        .fold(
            || vec![0u128; len],
            |mut buf, chunk| {
                for p in chunk.chunks_exact(d) {
                    let (i0, w0) = axis_weight(grid, p[0]);
                    let xs = [(i0, w0), ((i0 + 1) % n, WEIGHT_ONE - w0)];
                    if d == 1 {
                        for (i, w) in xs {
                            buf[i] += (w as u128) << WEIGHT_BITS;
                        }
                    } else {
                        let (j0, v0) = axis_weight(grid, p[1]);
                        let ys = [(j0, v0), ((j0 + 1) % n, WEIGHT_ONE - v0)];
                        for (i, w) in xs {
                            for (j, v) in ys {
                                buf[grid.flatten([i, j])] += w as u128 * v as u128;
                            }
                        }
                    }
                }
                buf
            },
        )
        .reduce(
            || vec![0u128; len],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let total = ens.len() as f64 * (WEIGHT_ONE as f64).powi(2);
    acc.into_iter().map(|c| c as f64 / total).collect()
}

/// Multiply by the Gaussian symbol `exp(-bandwidth^2 |xi|^2 / 2)`.
pub fn smooth(f: &Field, bandwidth: f64) -> Field {
    let grid = *f.grid();
    let sym: Vec<f64> = grid.wavenumbers().into_iter().map(|k| (-0.5 * (bandwidth * k).powi(2)).exp()).collect();
    let mut values = Vec::with_capacity(f.values().len());
    for c in 0..f.components() {
        let mut s = fft::forward(&grid, f.component(c));
        s.iter_mut().zip(&sym).for_each(|(z, w)| *z *= w);
        values.extend(fft::inverse(&grid, &s));
    }
    Field::new(grid, f.components(), values).expect("shape preserved")
}

/// Gaussian-smoothed empirical density with unit mass.
pub fn estimate_density(ens: &Ensemble, grid: &Grid, bandwidth: f64) -> Result<Field> {
    if ens.dim() != grid.dim() {
        return arg("ensemble and grid dimensions differ");
    }
    if !(bandwidth >= grid.spacing()) {
        return arg(format!("bandwidth {bandwidth} is below the grid spacing {}", grid.spacing()));
    }
    let frac = deposit(ens, grid);
    let cell = grid.cell_volume();
    let raw = Field::scalar(*grid, frac.into_iter().map(|m| m / cell).collect())?;
    let rho = smooth(&raw, bandwidth);
    let mass = rho.integral();
    Ok(rho.scale(1.0 / mass))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpe::gaussian_density;
    use crate::stable::StreamKey;

    #[test]
    fn atoms_at_a_node_give_a_gaussian_bump() {
        let g = Grid::unit_1d(128).unwrap();
        let x = g.axis_coordinate(64);
        let e = Ensemble::new(g, vec![x; 10], StreamKey::new(1, 0, 0)).unwrap();
        let bw = 3.0 * g.spacing();
        let rho = estimate_density(&e, &g, bw).unwrap();
        let oracle = gaussian_density(&g, bw).unwrap();
        assert!(rho.sub(&oracle).unwrap().sup_norm() < 1e-9 * oracle.sup_norm());
        assert!((rho.integral() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn deposit_weights_sum_to_one() {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let e = Ensemble::gaussian(g, 1000, &[0.2, -0.1], 0.7, StreamKey::new(3, 0, 0)).unwrap();
        let s: f64 = deposit(&e, &g).iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn deposit_is_order_independent() {
        let g = Grid::unit_1d(64).unwrap();
        let e = Ensemble::gaussian(g, 20_000, &[0.0], 1.0, StreamKey::new(3, 0, 0)).unwrap();
        let perm: Vec<usize> = (0..e.len()).rev().collect();
        assert_eq!(deposit(&e, &g), deposit(&e.permuted(&perm).unwrap(), &g));
    }

    #[test]
    fn uniform_particles_flat_density() {
        let g = Grid::unit_1d(128).unwrap();
        let n = 100_000;
        let side = g.side_length();
        let base = StreamKey::new(17, 0, 0);
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                use rand::Rng;
                base.with_lane(i as u64).rng().random_range(-0.5 * side..0.5 * side)
            })
            .collect();
        let e = Ensemble::new(g, xs, base).unwrap();
        let rho = estimate_density(&e, &g, g.spacing()).unwrap();
        let cell = g.cell_volume();
        // per-cell mass fraction deviates from its mean by at most 3 sqrt(N) / N
        let band = 3.0 * (n as f64).sqrt() / n as f64;
        for v in rho.values() {
            assert!((v * cell - cell / side).abs() <= band);
        }
    }

    #[test]
    fn bandwidth_below_spacing_rejected() {
        let g = Grid::unit_1d(64).unwrap();
        let e = Ensemble::new(g, vec![0.0, 1.0], StreamKey::new(1, 0, 0)).unwrap();
        assert!(estimate_density(&e, &g, 0.5 * g.spacing()).is_err());
    }
}
