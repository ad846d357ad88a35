//! Discrete Fourier transforms on [`Grid`]s backed by `rustfft`.
//!
//! Forward transforms are unnormalized; inverse transforms divide by the
//! node count and return the real part.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::grid::Grid;

type Plan = Arc<dyn Fft<f64>>;

fn plan(n: usize, direction: FftDirection) -> Plan {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((n, direction == FftDirection::Forward))
        .or_insert_with(|| FftPlanner::new().plan_fft(n, direction))
        .clone()
}

fn transform(grid: &Grid, data: &mut [Complex64], direction: FftDirection) {
    let n = grid.points_per_axis();
    let p = plan(n, direction);
    let mut scratch = vec![Complex64::default(); p.get_inplace_scratch_len()];
    // rows are contiguous, so one call handles axis 1 (or the only axis)
    p.process_with_scratch(data, &mut scratch);
    if grid.dim() == 2 {
        let mut column = vec![Complex64::default(); n];
        for c in 0..n {
            for r in 0..n {
                column[r] = data[r * n + c];
            }
            p.process_with_scratch(&mut column, &mut scratch);
            for r in 0..n {
                data[r * n + c] = column[r];
            }
        }
    }
}

pub fn forward(grid: &Grid, values: &[f64]) -> Vec<Complex64> {
    debug_assert_eq!(values.len(), grid.len());
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(grid, &mut data, FftDirection::Forward);
    data
}

pub fn forward_complex(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, FftDirection::Forward);
}

/// Inverse transform in place, normalized.
pub fn inverse_complex(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, FftDirection::Inverse);
    let s = 1.0 / grid.len() as f64;
    for z in data.iter_mut() {
        *z *= s;
    }
}

/// Real part of the normalized inverse transform.
pub fn inverse(grid: &Grid, spectrum: &[Complex64]) -> Vec<f64> {
    let mut data = spectrum.to_vec();
    inverse_complex(grid, &mut data);
    data.into_iter().map(|z| z.re).collect()
}

/// `(-1)^(m0+m1)`: phase relating DFT data to Fourier data when the grid starts at `-L/2`.
pub fn origin_phase(grid: &Grid, flat: usize) -> f64 {
    let idx = grid.unflatten(flat);
    if (idx[0] + idx[1]).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Zero every mode outside the two-thirds band.
pub fn project(grid: &Grid, spectrum: &mut [Complex64]) {
    for (f, z) in spectrum.iter_mut().enumerate() {
        if !grid.is_retained(f) {
            *z = Complex64::default();
        }
    }
}

/// Band-limit a real field to the retained band.
pub fn project_values(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let mut s = forward(grid, values);
    project(grid, &mut s);
    inverse(grid, &s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn roundtrip_2d() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let v: Vec<f64> = (0..g.len()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let back = inverse(&g, &forward(&g, &v));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_lands_on_its_mode() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let v: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.coordinate(i);
                (2.0 * x[0] + 3.0 * x[1]).cos()
            })
            .collect();
        let s = forward(&g, &v);
        for (f, z) in s.iter().enumerate() {
            let k = g.wavevector(f);
            let hit = (k[0].abs() - 2.0).abs() < 1e-9 && (k[1].abs() - 3.0).abs() < 1e-9 && k[0] * k[1] > 0.0;
            if !hit {
                assert!(z.norm() < 1e-9, "mode {k:?} = {z}");
            }
        }
    }
}
