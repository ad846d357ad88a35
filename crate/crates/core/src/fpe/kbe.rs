//! Backward Kolmogorov equation `d_s u = Delta^{alpha/2} u + B(t - s) . grad u`
//! and the duality gap against the forward solve.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{arg, Result};
use crate::fft;
use crate::fpe::kernel::KernelSpec;
use crate::fpe::solver::{fpe_solve, DriftTrajectory, Propagator, SolveOptions, SolverConfig, Trajectory};
use crate::grid::{Field, Grid};
use crate::spectral::ops::{check_alpha, derivative_symbol};

struct Advection {
    grid: Grid,
    deriv: Vec<Vec<Complex64>>,
    mask: Vec<bool>,
    dealias: bool,
}

impl Advection {
    /// DFT data of `B . grad u`.
    fn apply(&self, b: &Field, u_hat: &[Complex64], out: &mut [Complex64]) {
        let len = self.grid.len();
        let mut acc = vec![0.0; len];
        for (c, sym) in self.deriv.iter().enumerate() {
            let du: Vec<Complex64> = u_hat.iter().zip(sym).map(|(u, s)| u * s).collect();
            let du = fft::inverse(&self.grid, &du);
            for ((a, bc), d) in acc.iter_mut().zip(b.component(c)).zip(&du) {
                *a += bc * d;
            }
        }
        let s = fft::forward(&self.grid, &acc);
        for i in 0..len {
            out[i] = if !self.dealias || self.mask[i] { s[i] } else { Complex64::default() };
        }
    }
}

/// DFT data of `u^t(t)`.
pub(crate) fn kbe_spectrum(
    phi: &Field,
    alpha: f64,
    drift: &DriftTrajectory,
    t: f64,
    cfg: SolverConfig,
) -> Result<Vec<Complex64>> {
    check_alpha(alpha)?;
    cfg.validate()?;
    phi.require_scalar("kbe terminal data")?;
    let grid = *phi.grid();
    if *drift.grid() != grid {
        return arg("drift trajectory lives on a different grid");
    }
    if !drift.covers(0.0, t) {
        return arg(format!(
            "drift trajectory covers [{}, {}], needs [0, {t}]",
            drift.times[0],
            drift.times.last().unwrap()
        ));
    }
    let nsteps = cfg.steps_for(t)?;
    let adv = Advection {
        grid,
        deriv: (0..grid.dim()).map(|a| derivative_symbol(&grid, a)).collect(),
        mask: grid.retained_mask(),
        dealias: cfg.dealias,
    };
    let full = Propagator::new(&grid, alpha, cfg.dt);
    let half = Propagator::new(&grid, alpha, 0.5 * cfg.dt);
    let len = grid.len();
    let mut u = fft::forward(&grid, phi.values());
    if cfg.dealias {
        fft::project(&grid, &mut u);
    }
    let mut n = vec![Complex64::default(); len];
    let mut next = vec![Complex64::default(); len];
    let mut mid = vec![Complex64::default(); len];
    let dt = cfg.dt;
    for m in 0..nsteps {
        // the drift is read where the forward scheme sampled it on the mirrored interval
        let fwd_left = t - (m + 1) as f64 * dt;
        adv.apply(&drift.at(fwd_left.max(0.0)), &u, &mut n);
        if cfg.order == 1 {
            full.apply(&u, &n, &mut next);
        } else {
            half.apply(&u, &n, &mut mid);
            adv.apply(&drift.at((fwd_left + 0.5 * dt).max(0.0)), &mid, &mut n);
            full.apply(&u, &n, &mut next);
        }
        std::mem::swap(&mut u, &mut next);
    }
    Ok(u)
}

/// `u^t(t)` for terminal data `phi` and the time-reversed drift.
pub fn kbe_solve(phi: &Field, alpha: f64, drift: &DriftTrajectory, t: f64, cfg: SolverConfig) -> Result<Field> {
    let u = kbe_spectrum(phi, alpha, drift, t, cfg)?;
    Field::scalar(*phi.grid(), fft::inverse(phi.grid(), &u))
}

/// Grid pairing computed from DFT data (Parseval).
fn spectral_pairing(grid: &Grid, a: &[Complex64], b: &[Complex64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum();
    s * grid.cell_volume() / grid.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityReport {
    pub forward_pairing: f64,
    pub backward_pairing: f64,
    pub gap: f64,
}

/// Gap from an existing forward trajectory that ends at `t` and recorded its drift.
pub fn duality_gap_from(traj: &Trajectory, phi: &Field, alpha: f64, t: f64, cfg: SolverConfig) -> Result<DualityReport> {
    let drift = match &traj.drift {
        Some(d) => d,
        None => return arg("forward trajectory did not record its drift"),
    };
    if (traj.final_state.t - t).abs() > 1e-9 * t.max(1.0) {
        return arg(format!("forward trajectory ends at {}, not {t}", traj.final_state.t));
    }
    let sup = phi.sup_norm();
    if sup == 0.0 {
        return Ok(DualityReport { forward_pairing: 0.0, backward_pairing: 0.0, gap: 0.0 });
    }
    let grid = *phi.grid();
    let mut phi_hat = fft::forward(&grid, phi.values());
    if cfg.dealias {
        fft::project(&grid, &mut phi_hat);
    }
    let u = kbe_spectrum(phi, alpha, drift, t, cfg)?;
    let forward_pairing = spectral_pairing(&grid, &phi_hat, traj.final_state.spectrum());
    let backward_pairing = spectral_pairing(&grid, &u, traj.initial.spectrum());
    Ok(DualityReport { forward_pairing, backward_pairing, gap: (forward_pairing - backward_pairing).abs() / sup })
}

/// `|<phi, rho_t> - <u^t(t), rho_0>| / |phi|_inf` after solving forward from `rho0`.
pub fn duality_gap(
    rho0: &Field,
    alpha: f64,
    kernel: &KernelSpec,
    phi: &Field,
    t: f64,
    cfg: SolverConfig,
) -> Result<DualityReport> {
    let opts = SolveOptions { observe_at: Vec::new(), record_drift: true };
    let traj = fpe_solve(rho0, alpha, kernel, t, cfg, &opts, |_| Ok(()))?;
    duality_gap_from(&traj, phi, alpha, t, cfg)
}
