//! Short-time regularity rates of the density and of the drift.

use serde::{Deserialize, Serialize};

use crate::analysis::fit::{fit_loglog, LogLogFit};
use crate::error::{arg, Result};
use crate::fpe::{drift_field, fpe_solve, gaussian_density, FpeState, KernelSpec, SolveOptions, SolverConfig};
use crate::grid::Grid;
use crate::spectral::{besov_norm, BesovIndex, DyadicPartition};

/// Width of the near-delta initial density in grid cells.
pub const INITIAL_WIDTH_CELLS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateWindow {
    pub t_min: f64,
    pub t_max: f64,
    /// Number of geometrically spaced observation times.
    pub points: usize,
}

impl RateWindow {
    /// One decade starting where the initializer width stops dominating:
    /// `t_min = max(16 dt, 2 w0^alpha)` with `w0` the initial width.
    pub fn default_for(alpha: f64, grid: &Grid, dt: f64) -> Self {
        let w0 = INITIAL_WIDTH_CELLS * grid.spacing();
        let t_min = (4.0 * INITIAL_WIDTH_CELLS * dt).max(2.0 * w0.powf(alpha));
        Self { t_min, t_max: 10.0 * t_min, points: 10 }
    }

    /// Geometric grid snapped to multiples of `dt`, deduplicated.
    pub fn times(&self, dt: f64) -> Result<Vec<f64>> {
        if !(self.t_min > 0.0 && self.t_max > self.t_min) || self.points < 4 {
            return arg("rate window needs 0 < t_min < t_max and at least 4 points");
        }
        let r = (self.t_max / self.t_min).ln();
        let mut steps: Vec<u64> = (0..self.points)
            .map(|k| {
                let t = self.t_min * (r * k as f64 / (self.points - 1) as f64).exp();
                ((t / dt).round() as u64).max(1)
            })
            .collect();
        steps.dedup();
        if steps.len() < 4 {
            return arg("rate window collapses to fewer than 4 distinct steps");
        }
        Ok(steps.into_iter().map(|s| s as f64 * dt).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub delta: f64,
    pub alpha: f64,
    pub times: Vec<f64>,
    /// `|rho_t|_{B^delta_{1,inf}}`.
    pub norms: Vec<f64>,
    pub compensated: Vec<f64>,
    pub fitted_slope: f64,
    pub slope_band: f64,
    /// `max / min` of `t^{delta/alpha} |rho_t|` over the window.
    pub compensated_spread: f64,
    pub window: [f64; 2],
    pub min_rho: f64,
}

impl RateReport {
    /// No faster blow-up than `t^{-delta/alpha}` and bounded compensated norm.
    pub fn passes(&self, spread_max: f64, slope_slack: f64) -> bool {
        self.compensated_spread <= spread_max && self.fitted_slope >= -self.delta / self.alpha - slope_slack
    }
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        1.0
    } else {
        max / min
    }
}

/// Solve from the near-delta initializer and record `B^delta_{1,inf}` norms on the window.
pub fn rate_experiment(
    alpha: f64,
    kernel: &KernelSpec,
    deltas: &[f64],
    grid: &Grid,
    cfg: SolverConfig,
    window: RateWindow,
) -> Result<Vec<RateReport>> {
    for &d in deltas {
        if !(d >= 0.0) {
            return arg(format!("regularity index must be nonnegative, got {d}"));
        }
        if alpha <= 1.0 && d >= alpha {
            return arg(format!(
                "for alpha = {alpha} <= 1 the short-time rate is only available for delta < alpha, got {d}"
            ));
        }
    }
    let times = window.times(cfg.dt)?;
    let horizon = *times.last().unwrap();
    let part = DyadicPartition::new(grid)?;
    let rho0 = gaussian_density(grid, INITIAL_WIDTH_CELLS * grid.spacing())?;
    let mut norms = vec![Vec::with_capacity(times.len()); deltas.len()];
    let opts = SolveOptions { observe_at: times.clone(), record_drift: false };
    let traj = fpe_solve(&rho0, alpha, kernel, horizon, cfg, &opts, |s: &FpeState| {
        let rho = s.rho();
        for (k, &d) in deltas.iter().enumerate() {
            norms[k].push(besov_norm(&rho, BesovIndex::new(d, 1.0, f64::INFINITY)?, &part)?);
        }
        Ok(())
    })?;
    deltas
        .iter()
        .zip(norms)
        .map(|(&delta, norms)| {
            let compensated: Vec<f64> = times.iter().zip(&norms).map(|(t, n)| t.powf(delta / alpha) * n).collect();
            let fit: LogLogFit = fit_loglog(&times, &norms)?;
            Ok(RateReport {
                delta,
                alpha,
                times: times.clone(),
                compensated_spread: spread(&compensated),
                compensated,
                norms,
                fitted_slope: fit.slope,
                slope_band: fit.slope_band,
                window: [times[0], horizon],
                min_rho: traj.stats.min_rho,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftRegularityReport {
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    /// Hölder index `1 - alpha/2 + eps/2`.
    pub smoothness: f64,
    pub times: Vec<f64>,
    /// Largest component norm `|B(t)_c|_{C^s}` per time.
    pub norms: Vec<f64>,
    /// `t^{1/2 - eps/alpha}` times the norm, on the window.
    pub compensated: Vec<f64>,
    pub compensated_spread: f64,
    /// Trapezoid approximation of `(int |B(t)|^2_{C^s} dt)^{1/2}` over all states.
    pub l2_time_norm: f64,
    pub window: [f64; 2],
}

/// Hölder norms of `B(t) = K * rho_t` along observed states.
///
/// `states` must be in increasing time order; those with `t >= t_min` enter the compensated
/// spread, all enter the time integral.
pub fn drift_regularity_check(
    alpha: f64,
    beta: f64,
    kernel: &KernelSpec,
    states: &[FpeState],
    eps: f64,
    t_min: f64,
) -> Result<DriftRegularityReport> {
    if !(eps > 0.0 && eps < beta + alpha - 1.0) {
        return arg(format!("eps must lie in (0, beta + alpha - 1) = (0, {}), got {eps}", beta + alpha - 1.0));
    }
    if states.len() < 2 || states.windows(2).any(|w| w[1].t <= w[0].t) {
        return arg("need at least two states in increasing time order");
    }
    let grid = *states[0].grid();
    let part = DyadicPartition::new(&grid)?;
    let s = 1.0 - alpha / 2.0 + eps / 2.0;
    let mut times = Vec::with_capacity(states.len());
    let mut norms = Vec::with_capacity(states.len());
    for st in states {
        let b = drift_field(kernel, &st.rho())?;
        let mut m = 0.0f64;
        for c in 0..b.components() {
            m = m.max(besov_norm(&b.component_field(c), BesovIndex::holder(s), &part)?);
        }
        times.push(st.t);
        norms.push(m);
    }
    let l2 = times
        .windows(2)
        .zip(norms.windows(2))
        .map(|(t, n)| 0.5 * (t[1] - t[0]) * (n[0] * n[0] + n[1] * n[1]))
        .sum::<f64>()
        .sqrt();
    let window: Vec<(f64, f64)> = times.iter().copied().zip(norms.iter().copied()).filter(|(t, _)| *t >= t_min).collect();
    if window.is_empty() {
        return arg("no state falls in the compensation window");
    }
    let compensated: Vec<f64> = window.iter().map(|(t, n)| t.powf(0.5 - eps / alpha) * n).collect();
    Ok(DriftRegularityReport {
        alpha,
        beta,
        eps,
        smoothness: s,
        compensated_spread: spread(&compensated),
        compensated,
        l2_time_norm: l2,
        window: [window[0].0, window.last().unwrap().0],
        times,
        norms,
    })
}
