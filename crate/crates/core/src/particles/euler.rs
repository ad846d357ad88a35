//! Euler–Maruyama steps with exact stable increments.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::fft;
use crate::fpe::solver::COURANT_LIMIT;
use crate::fpe::{DriftTrajectory, KernelSpec};
use crate::grid::{Field, Grid};
use crate::particles::density::estimate_density;
use crate::particles::ensemble::Ensemble;
use crate::stable::{sample_increment_into, StableParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMode {
    /// Drift from the smoothed empirical density, interpolated at the particles.
    Grid,
    /// Direct sums of the mollified kernel over all pairs.
    Pairwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Nearest,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerConfig {
    pub dt: f64,
    pub drift_mode: DriftMode,
    pub bandwidth: f64,
    #[serde(default = "default_interp")]
    pub interpolation: Interpolation,
}

fn default_interp() -> Interpolation {
    Interpolation::Linear
}

impl EulerConfig {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.bandwidth >= grid.spacing()) {
            return Err(Error::Config(format!(
                "bandwidth {} is below the grid spacing {}",
                self.bandwidth,
                grid.spacing()
            )));
        }
        Ok(())
    }
}

/// Value of every component of `f` at the torus point `x`.
pub fn interpolate(f: &Field, x: &[f64], interp: Interpolation, out: &mut [f64]) {
    let grid = f.grid();
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let half = 0.5 * grid.side_length();
    let d = grid.dim();
    let mut lo = [0usize; 2];
    let mut w = [0.0f64; 2];
    for a in 0..d {
        let u = (grid.wrap(x[a]) + half) / h;
        let i0 = u.floor();
        lo[a] = (i0 as i64).rem_euclid(n as i64) as usize;
        w[a] = u - i0;
        if interp == Interpolation::Nearest && w[a] >= 0.5 {
            lo[a] = (lo[a] + 1) % n;
        }
    }
    let len = grid.len();
    for (c, o) in out.iter_mut().enumerate() {
        let v = &f.values()[c * len..(c + 1) * len];
        *o = match (interp, d) {
            (Interpolation::Nearest, _) => v[grid.flatten(lo)],
            (Interpolation::Linear, 1) => (1.0 - w[0]) * v[lo[0]] + w[0] * v[(lo[0] + 1) % n],
            (Interpolation::Linear, _) => {
                let (i1, j1) = ((lo[0] + 1) % n, (lo[1] + 1) % n);
                (1.0 - w[0]) * ((1.0 - w[1]) * v[grid.flatten([lo[0], lo[1]])] + w[1] * v[grid.flatten([lo[0], j1])])
                    + w[0] * ((1.0 - w[1]) * v[grid.flatten([i1, lo[1]])] + w[1] * v[grid.flatten([i1, j1])])
            }
        };
    }
}

/// Interacting particle stepper for one `(grid, alpha, K, cfg)`.
pub struct McKeanStepper {
    grid: Grid,
    params: StableParams,
    cfg: EulerConfig,
    kernel_hat: Vec<Vec<Complex64>>,
    /// `K` convolved with the density-smoothing Gaussian (pairwise mode).
    mollified: Option<Field>,
    zero_kernel: bool,
}

impl McKeanStepper {
    pub fn new(grid: &Grid, params: StableParams, kernel: &KernelSpec, cfg: EulerConfig) -> Result<Self> {
        cfg.validate(grid)?;
        if params.dim != grid.dim() {
            return arg("noise and grid dimensions differ");
        }
        let kernel_hat = kernel.multipliers(grid)?;
        let mollified = match cfg.drift_mode {
            DriftMode::Grid => None,
            DriftMode::Pairwise => {
                let k = kernel.field(grid)?;
                let mut values = Vec::with_capacity(k.values().len());
                for c in 0..k.components() {
                    let mut s = fft::forward(grid, k.component(c));
                    for (m, z) in s.iter_mut().enumerate() {
                        *z *= if grid.is_retained(m) { (-0.5 * (cfg.bandwidth * grid.wavenumber(m)).powi(2)).exp() } else { 0.0 };
                    }
                    values.extend(fft::inverse(grid, &s));
                }
                Some(Field::new(*grid, k.components(), values)?)
            }
        };
        Ok(Self { grid: *grid, params, cfg, kernel_hat, mollified, zero_kernel: kernel.is_zero() })
    }

    /// Drift field on the grid from the ensemble's smoothed density.
    pub fn grid_drift(&self, ens: &Ensemble) -> Result<Field> {
        let rho = estimate_density(ens, &self.grid, self.cfg.bandwidth)?;
        let rho_hat = fft::forward(&self.grid, rho.values());
        let mut values = Vec::with_capacity(self.grid.dim() * self.grid.len());
        for m in &self.kernel_hat {
            let s: Vec<Complex64> = rho_hat.iter().zip(m).map(|(a, b)| a * b).collect();
            values.extend(fft::inverse(&self.grid, &s));
        }
        Field::new(self.grid, self.grid.dim(), values)
    }

    /// Drift at each particle, particle-major.
    pub fn particle_drift(&self, ens: &Ensemble) -> Result<Vec<f64>> {
        let d = self.grid.dim();
        let n = ens.len();
        let mut out = vec![0.0; n * d];
        if self.zero_kernel {
            return Ok(out);
        }
        let interp = self.cfg.interpolation;
        match &self.mollified {
            None => {
                let b = self.grid_drift(ens)?;
                out.par_chunks_mut(d).enumerate().for_each(|(i, o)| interpolate(&b, ens.position(i), interp, o));
            }
            Some(k) => {
                let inv = 1.0 / n as f64;
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by_key(|&j| ens.lanes()[j]);
                out.par_chunks_mut(d).enumerate().for_each(|(i, o)| {
                    let xi = ens.position(i);
                    let mut acc = [0.0; 2];
                    let mut v = [0.0; 2];
                    let mut z = [0.0; 2];
                    // lane order keeps the sum independent of scheduling
                    for &j in &order {
                        let xj = ens.position(j);
                        for a in 0..d {
                            z[a] = xi[a] - xj[a];
                        }
                        interpolate(k, &z[..d], interp, &mut v[..d]);
                        for a in 0..d {
                            acc[a] += v[a];
                        }
                    }
                    for a in 0..d {
                        o[a] = acc[a] * inv;
                    }
                });
            }
        }
        Ok(out)
    }

    /// `X_i <- X_i + B(X_i) dt + dL_i`, noise keyed `(seed, lane_i, step)`.
    pub fn step(&self, ens: &mut Ensemble) -> Result<()> {
        if ens.grid() != &self.grid {
            return arg("ensemble lives on a different grid");
        }
        let d = self.grid.dim();
        let dt = self.cfg.dt;
        let drift = self.particle_drift(ens)?;
        let speed = drift.chunks_exact(d).map(|b| b.iter().map(|v| v * v).sum::<f64>()).fold(0.0, f64::max).sqrt();
        let courant = dt * speed * self.grid.retained_radius();
        if courant > COURANT_LIMIT {
            return Err(Error::StepSize { speed, courant });
        }
        let key = ens.base.with_step(ens.step);
        let mut next = vec![0.0; ens.positions().len()];
        next.par_chunks_mut(d).enumerate().try_for_each(|(i, o)| -> Result<()> {
            sample_increment_into(&self.params, dt, key.with_lane(ens.lanes()[i]), o)?;
            let x = ens.position(i);
            for a in 0..d {
                o[a] = self.grid.wrap(x[a] + drift[i * d + a] * dt + o[a]);
            }
            Ok(())
        })?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: ens.step as usize + 1, t: ens.t + dt });
        }
        ens.set_positions(next);
        ens.step += 1;
        ens.t = ens.step as f64 * dt;
        Ok(())
    }
}

/// One interacting-particle step.
pub fn step_mckean(
    ens: &Ensemble,
    kernel: &KernelSpec,
    params: StableParams,
    cfg: EulerConfig,
) -> Result<Ensemble> {
    let stepper = McKeanStepper::new(ens.grid(), params, kernel, cfg)?;
    let mut next = ens.clone();
    stepper.step(&mut next)?;
    Ok(next)
}

/// `x + B(t, x) dt + noise` per particle against a frozen drift trajectory.
pub fn step_linear(
    positions: &[f64],
    drift: &DriftTrajectory,
    t: f64,
    dt: f64,
    noise: &[f64],
    interp: Interpolation,
) -> Result<Vec<f64>> {
    let grid = *drift.grid();
    let d = grid.dim();
    if positions.len() != noise.len() || !positions.len().is_multiple_of(d) {
        return arg("positions and noise must both hold N * dim values");
    }
    if !drift.covers(t, t) {
        return arg(format!("drift trajectory does not cover t = {t}"));
    }
    let b = drift.at(t);
    let mut v = [0.0; 2];
    let mut out = Vec::with_capacity(positions.len());
    for (x, dl) in positions.chunks_exact(d).zip(noise.chunks_exact(d)) {
        interpolate(&b, x, interp, &mut v[..d]);
        for a in 0..d {
            out.push(grid.wrap(x[a] + v[a] * dt + dl[a]));
        }
    }
    Ok(out)
}
