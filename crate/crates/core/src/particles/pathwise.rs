//! Pathwise stability and strong self-convergence of the frozen-drift SDE.

use serde::Serialize;

use crate::analysis::fit_loglog;
use crate::error::{arg, Result};
use crate::fpe::DriftTrajectory;
use crate::grid::Grid;
use crate::particles::euler::{step_linear, Interpolation};
use crate::stable::{path, refine_path, NoisePath, StableParams, StreamKey};

/// Euler trajectory of one particle driven by `noise`; `nsteps + 1` positions, step-major.
pub fn solve_linear(x0: &[f64], drift: &DriftTrajectory, noise: &NoisePath, interp: Interpolation) -> Result<Vec<f64>> {
    let d = drift.grid().dim();
    if x0.len() != d || noise.params.dim != d {
        return arg("initial point and noise must match the grid dimension");
    }
    if !drift.covers(0.0, noise.horizon()) {
        return arg("drift trajectory does not cover the noise horizon");
    }
    let grid = *drift.grid();
    let mut out = Vec::with_capacity((noise.nsteps() + 1) * d);
    let mut x: Vec<f64> = x0.iter().map(|&v| grid.wrap(v)).collect();
    out.extend_from_slice(&x);
    for i in 0..noise.nsteps() {
        x = step_linear(&x, drift, i as f64 * noise.dt, noise.dt, noise.increment(i), interp)?;
        out.extend_from_slice(&x);
    }
    Ok(out)
}

/// Running maximum of the torus distance between two solutions sharing `noise`.
pub fn pathwise_gap_on(
    x0a: &[f64],
    x0b: &[f64],
    drift: &DriftTrajectory,
    noise: &NoisePath,
    interp: Interpolation,
) -> Result<Vec<f64>> {
    let grid = drift.grid();
    let d = grid.dim();
    let a = solve_linear(x0a, drift, noise, interp)?;
    let b = solve_linear(x0b, drift, noise, interp)?;
    let mut sup = 0.0f64;
    Ok(a.chunks_exact(d)
        .zip(b.chunks_exact(d))
        .map(|(p, q)| {
            sup = sup.max(grid.torus_distance(p, q));
            sup
        })
        .collect())
}

/// Gap series on the step grid `0, h, ..., horizon` for the path keyed by `base`.
pub fn pathwise_gap(
    x0a: &[f64],
    x0b: &[f64],
    drift: &DriftTrajectory,
    params: StableParams,
    horizon: f64,
    h: f64,
    base: StreamKey,
) -> Result<Vec<f64>> {
    let nsteps = (horizon / h).round();
    if !(nsteps >= 1.0) || (nsteps * h - horizon).abs() > 1e-9 * horizon {
        return arg(format!("horizon {horizon} is not a positive multiple of h = {h}"));
    }
    let noise = path(params, horizon, nsteps as usize, base)?;
    pathwise_gap_on(x0a, x0b, drift, &noise, Interpolation::Linear)
}

/// Lipschitz bound of the linear interpolant of every snapshot (Frobenius over axes and components).
pub fn drift_lipschitz(drift: &DriftTrajectory) -> f64 {
    let grid = drift.grid();
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let len = grid.len();
    let mut best = 0.0f64;
    for f in &drift.fields {
        let mut sq = 0.0;
        for c in 0..f.components() {
            let v = &f.values()[c * len..(c + 1) * len];
            for axis in 0..grid.dim() {
                let mut m = 0.0f64;
                for i in 0..len {
                    let mut idx = grid.unflatten(i);
                    idx[axis] = (idx[axis] + 1) % n;
                    m = m.max((v[grid.flatten(idx)] - v[i]).abs() / h);
                }
                sq += m * m;
            }
        }
        best = best.max(sq.sqrt());
    }
    best
}

/// Discrete Gronwall bound `eps e^{Lip T}` with a 50% allowance.
pub fn gronwall_envelope(eps: f64, lipschitz: f64, horizon: f64) -> f64 {
    1.5 * eps * (lipschitz * horizon).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceLadder {
    /// Step sizes `h`; entry `k` compares the solutions at `h` and `h/2`.
    pub steps: Vec<f64>,
    /// Mean terminal torus distance over the samples.
    pub gaps: Vec<f64>,
    pub samples: usize,
}

/// Terminal gaps between step sizes `h0 2^-k` and `h0 2^-(k+1)`, `k < levels`,
/// under common noise from repeated refinement. Sample `s` uses lane `s` of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn self_convergence_ladder(
    x0: &[f64],
    drift: &DriftTrajectory,
    params: StableParams,
    horizon: f64,
    h0: f64,
    levels: usize,
    samples: usize,
    seed: u64,
) -> Result<ConvergenceLadder> {
    let nsteps = (horizon / h0).round();
    if !(nsteps >= 1.0) || (nsteps * h0 - horizon).abs() > 1e-9 * horizon {
        return arg(format!("horizon {horizon} is not a positive multiple of h0 = {h0}"));
    }
    if samples == 0 || levels == 0 {
        return arg("ladder needs at least one level and one sample");
    }
    let grid: Grid = *drift.grid();
    let d = grid.dim();
    let mut sums = vec![0.0; levels];
    for s in 0..samples {
        let mut noise = path(params, horizon, nsteps as usize, StreamKey::new(seed, s as u64, 0))?;
        let mut prev = terminal(x0, drift, &noise, d)?;
        for sum in sums.iter_mut() {
            noise = refine_path(&noise)?;
            let next = terminal(x0, drift, &noise, d)?;
            *sum += grid.torus_distance(&prev, &next);
            prev = next;
        }
    }
    Ok(ConvergenceLadder {
        steps: (0..levels).map(|k| h0 * 0.5f64.powi(k as i32)).collect(),
        gaps: sums.into_iter().map(|s| s / samples as f64).collect(),
        samples,
    })
}

fn terminal(x0: &[f64], drift: &DriftTrajectory, noise: &NoisePath, d: usize) -> Result<Vec<f64>> {
    let tr = solve_linear(x0, drift, noise, Interpolation::Linear)?;
    Ok(tr[tr.len() - d..].to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderReport {
    pub order: f64,
    /// Half-width of the 95% band.
    pub band: f64,
    pub monotone: bool,
    pub warning: Option<String>,
}

/// Least-squares slope of `log gap` against `log h`.
pub fn strong_error_order(gaps: &[f64], steps: &[f64]) -> Result<OrderReport> {
    if gaps.len() != steps.len() || gaps.len() < 4 {
        return arg("strong order fit needs at least 4 ladder points");
    }
    let fit = fit_loglog(steps, gaps)?;
    let mut pairs: Vec<(f64, f64)> = steps.iter().copied().zip(gaps.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = pairs.windows(2).all(|w| w[0].1 <= w[1].1);
    let warning = (!monotone).then(|| "gaps do not decrease monotonically with h".to_string());
    Ok(OrderReport { order: fit.slope, band: fit.slope_band, monotone, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Field;

    fn smooth_drift(g: Grid) -> DriftTrajectory {
        DriftTrajectory::frozen(Field::from_fn(g, |x| -0.8 * x[0].sin()), 2.0).unwrap()
    }

    #[test]
    fn identical_starts_give_zero_gap() {
        let g = Grid::unit_1d(64).unwrap();
        let p = StableParams::new(1.5, 1).unwrap();
        let gap = pathwise_gap(&[0.4], &[0.4], &smooth_drift(g), p, 1.0, 0.01, StreamKey::new(3, 0, 0)).unwrap();
        assert_eq!(gap.len(), 101);
        assert!(gap.iter().all(|&v| v.to_bits() == 0));
    }

    #[test]
    fn gap_is_running_max() {
        let g = Grid::unit_1d(64).unwrap();
        let p = StableParams::new(1.5, 1).unwrap();
        let gap = pathwise_gap(&[0.4], &[0.401], &smooth_drift(g), p, 1.0, 0.01, StreamKey::new(3, 0, 0)).unwrap();
        assert!(gap.windows(2).all(|w| w[1] >= w[0]));
        assert!((gap[0] - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_of_sine_drift() {
        let g = Grid::unit_1d(256).unwrap();
        let lip = drift_lipschitz(&smooth_drift(g));
        assert!((lip - 0.8).abs() < 1e-3);
    }

    #[test]
    fn order_fit_flags_non_monotone_ladder() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let r = strong_error_order(&[1e-2, 5e-3, 2.5e-3, 1.25e-3], &hs).unwrap();
        assert!((r.order - 1.0).abs() < 1e-12 && r.monotone && r.warning.is_none());
        let r = strong_error_order(&[1e-2, 5e-3, 6e-3, 1.25e-3], &hs).unwrap();
        assert!(!r.monotone && r.warning.is_some());
        assert!(strong_error_order(&[1.0, 0.5, 0.2], &hs[..3]).is_err());
    }
}
