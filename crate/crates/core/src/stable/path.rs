//! Stable noise paths and common-noise refinement.

use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::stable::rng::StreamKey;
use crate::stable::sampler::{sample_increment_into, StableParams};

/// Increments of `L` on a uniform step grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePath {
    pub params: StableParams,
    pub dt: f64,
    /// Key of step 0; step `i` uses `base.with_step(i)`.
    pub base: StreamKey,
    /// Number of refinements applied since the path was drawn.
    pub level: u32,
    /// `nsteps * dim` values, step-major.
    pub increments: Vec<f64>,
}

impl NoisePath {
    pub fn nsteps(&self) -> usize {
        self.increments.len() / self.params.dim
    }

    pub fn increment(&self, i: usize) -> &[f64] {
        let d = self.params.dim;
        &self.increments[i * d..(i + 1) * d]
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.nsteps() as f64
    }

    /// Running sums `L_{t_0} = 0, L_{t_1}, ...`, `(nsteps + 1) * dim` values.
    pub fn positions(&self) -> Vec<f64> {
        let d = self.params.dim;
        let mut out = vec![0.0; (self.nsteps() + 1) * d];
        for i in 0..self.nsteps() {
            for c in 0..d {
                out[(i + 1) * d + c] = out[i * d + c] + self.increments[i * d + c];
            }
        }
        out
    }
}

/// `nsteps` increments over `[0, horizon]` keyed from `base` (step field overwritten).
pub fn path(params: StableParams, horizon: f64, nsteps: usize, base: StreamKey) -> Result<NoisePath> {
    if nsteps == 0 {
        return arg("a noise path needs at least one step");
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return arg(format!("path horizon must be positive, got {horizon}"));
    }
    let dt = horizon / nsteps as f64;
    let base = base.with_step(0);
    let d = params.dim;
    let mut increments = vec![0.0; nsteps * d];
    for (i, chunk) in increments.chunks_exact_mut(d).enumerate() {
        sample_increment_into(&params, dt, base.with_step(i as u64), chunk)?;
    }
    Ok(NoisePath { params, dt, base, level: 0, increments })
}

/// Split `c` into `(first, c - first)` so that the floating-point pair sum returns `c`
/// whenever `|first| <= |c|` (two-sum correction); otherwise the sum is within
/// one ulp of the larger half.
fn split(c: f64, first: f64) -> (f64, f64) {
    let second = c - first;
    let first = c - second;
    (first, second)
}

/// Double the resolution of a path while keeping its coarse increments.
///
/// For `alpha >= 1` each coarse increment `c` is split symmetrically as
/// `c/2 +- s e` with `e` an independent `dt` increment and
/// `s^alpha = 1/2 - 2^-alpha`, so both halves have the exact `dt/2` marginal
/// (and the pair is the exact Brownian bridge when `alpha = 2`). For
/// `alpha < 1` no such scaling exists; the first half is drawn from the
/// `dt/2` law and the second is the remainder. Draws are keyed from a
/// refinement-level stream, so refinement is deterministic.
pub fn refine_path(coarse: &NoisePath) -> Result<NoisePath> {
    let d = coarse.params.dim;
    let alpha = coarse.params.alpha;
    let half = 0.5 * coarse.dt;
    let keys = coarse.base.derive(0x7265_6669_6e65 + coarse.level as u64);
    let symmetric = alpha >= 1.0;
    let (draw_dt, spread) = if symmetric {
        (coarse.dt, (0.5 - 2f64.powf(-alpha)).powf(1.0 / alpha))
    } else {
        (half, 1.0)
    };
    let mut increments = vec![0.0; 2 * coarse.increments.len()];
    let mut draw = vec![0.0; d];
    for i in 0..coarse.nsteps() {
        sample_increment_into(&coarse.params, draw_dt, keys.with_step(i as u64), &mut draw)?;
        let c = coarse.increment(i);
        for k in 0..d {
            let first = if symmetric { 0.5 * c[k] + spread * draw[k] } else { draw[k] };
            let (a, b) = split(c[k], first);
            increments[(2 * i) * d + k] = a;
            increments[(2 * i + 1) * d + k] = b;
        }
    }
    Ok(NoisePath { params: coarse.params, dt: half, base: coarse.base, level: coarse.level + 1, increments })
}

/// Sum consecutive pairs of increments (inverse of refinement up to rounding).
pub fn coarsen(fine: &NoisePath) -> Result<NoisePath> {
    let d = fine.params.dim;
    if !fine.nsteps().is_multiple_of(2) {
        return arg("coarsening needs an even number of steps");
    }
    let increments = (0..fine.nsteps() / 2)
        .flat_map(|i| (0..d).map(move |k| (i, k)))
        .map(|(i, k)| fine.increment(2 * i)[k] + fine.increment(2 * i + 1)[k])
        .collect();
    Ok(NoisePath {
        params: fine.params,
        dt: 2.0 * fine.dt,
        base: fine.base,
        level: fine.level.saturating_sub(1),
        increments,
    })
}
