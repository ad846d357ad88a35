//! Littlewood–Paley blocks and discrete Besov norms.

use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::fft;
use crate::grid::{lp_norm, Field};
use crate::spectral::partition::DyadicPartition;

/// Besov index `(s, p, q)` with `p, q` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovIndex {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovIndex {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0 && q >= 1.0) || s.is_nan() {
            return arg(format!("Besov index needs p, q >= 1 (got p = {p}, q = {q})"));
        }
        Ok(Self { s, p, q })
    }

    /// The Hölder–Zygmund scale `C^s = B^s_{inf,inf}`.
    pub fn holder(s: f64) -> Self {
        Self { s, p: f64::INFINITY, q: f64::INFINITY }
    }
}

fn check_grid(f: &Field, part: &DyadicPartition) -> Result<()> {
    if f.grid() != part.grid() {
        return arg("field and partition live on different grids");
    }
    Ok(())
}

/// `R_j f` for every component of `f`.
pub fn lp_block(f: &Field, j: i32, part: &DyadicPartition) -> Result<Field> {
    check_grid(f, part)?;
    let w = part.weights(j)?;
    let grid = *f.grid();
    let mut values = Vec::with_capacity(f.values().len());
    for c in 0..f.components() {
        let mut s = fft::forward(&grid, f.component(c));
        for (z, &wj) in s.iter_mut().zip(w) {
            *z *= wj;
        }
        values.extend(fft::inverse(&grid, &s));
    }
    Field::new(grid, f.components(), values)
}

/// All blocks `R_{-1} f, ..., R_{j_max} f` of a scalar field from one forward transform.
pub fn lp_blocks(f: &Field, part: &DyadicPartition) -> Result<Vec<Vec<f64>>> {
    check_grid(f, part)?;
    f.require_scalar("lp_blocks")?;
    let grid = *f.grid();
    let spectrum = fft::forward(&grid, f.values());
    part.shells()
        .map(|j| {
            let w = part.weights(j)?;
            let s: Vec<_> = spectrum.iter().zip(w).map(|(z, &wj)| z * wj).collect();
            Ok(fft::inverse(&grid, &s))
        })
        .collect()
}

/// Per-shell norms `||R_j f||_p`, indexed from `j = -1`.
pub fn shell_norms(f: &Field, p: f64, part: &DyadicPartition) -> Result<Vec<f64>> {
    let cell = f.grid().cell_volume();
    Ok(lp_blocks(f, part)?.iter().map(|b| lp_norm(b, cell, p)).collect())
}

/// Aggregate shell norms into `[sum_j (2^{sj} a_j)^q]^{1/q}`.
pub fn aggregate(shell_norms: &[f64], s: f64, q: f64) -> f64 {
    let terms = shell_norms.iter().enumerate().map(|(i, a)| 2f64.powf(s * (i as f64 - 1.0)) * a);
    if q.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Discrete `B^s_{p,q}` norm of a scalar field over shells `-1..=j_max`.
pub fn besov_norm(f: &Field, idx: BesovIndex, part: &DyadicPartition) -> Result<f64> {
    let norms = shell_norms(f, idx.p, part)?;
    Ok(aggregate(&norms, idx.s, idx.q))
}
