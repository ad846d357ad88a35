//! Dyadic Littlewood–Paley partition of the grid frequencies.
//!
//! The radial cutoff `chi` equals 1 on `|xi| <= 1`, vanishes on `|xi| >= 3/2`
//! and is the normalized integral of the `exp(-1/(1-t^2))` bump in between.
//! Shells are `psi_{-1}(xi) = chi(2 xi)` and
//! `psi_j(xi) = chi(2^-j xi) - chi(2^{1-j} xi)`. The top shell `j_max`
//! absorbs everything above `2^{j_max-1}` inside the retained band, so the
//! shells sum to one on every retained mode.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::grid::Grid;

const TABLE_INTERVALS: usize = 4096;

// 5-point Gauss–Legendre on [-1, 1]
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

/// Tabulated smooth radial cutoff.
#[derive(Debug)]
pub struct ChiProfile {
    /// Cumulative bump integral at equispaced `t` nodes on `[-1, 1]`.
    cumulative: Vec<f64>,
    total: f64,
}

impl ChiProfile {
    fn build() -> Self {
        let h = 2.0 / TABLE_INTERVALS as f64;
        let mut cumulative = Vec::with_capacity(TABLE_INTERVALS + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 0..TABLE_INTERVALS {
            let a = -1.0 + i as f64 * h;
            let mid = a + 0.5 * h;
            let piece: f64 = GL_NODES.iter().zip(GL_WEIGHTS).map(|(x, w)| w * bump(mid + 0.5 * h * x)).sum();
            acc += 0.5 * h * piece;
            cumulative.push(acc);
        }
        Self { total: acc, cumulative }
    }

    /// Shared table, built once per process.
    pub fn shared() -> Arc<ChiProfile> {
        static TABLE: OnceLock<Arc<ChiProfile>> = OnceLock::new();
        TABLE.get_or_init(|| Arc::new(Self::build())).clone()
    }

    /// `chi(r)` for a radius `r >= 0`.
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 1.0 {
            return 1.0;
        }
        if r >= 1.5 {
            return 0.0;
        }
        let t = 4.0 * (r - 1.0) - 1.0;
        let h = 2.0 / TABLE_INTERVALS as f64;
        let pos = (t + 1.0) / h;
        let i = (pos.floor() as usize).min(TABLE_INTERVALS - 1);
        let s = pos - i as f64;
        let (f0, f1) = (self.cumulative[i], self.cumulative[i + 1]);
        let t0 = -1.0 + i as f64 * h;
        let (d0, d1) = (bump(t0) * h, bump(t0 + h) * h);
        // cubic Hermite with exact end slopes
        let s2 = s * s;
        let s3 = s2 * s;
        let f = (2.0 * s3 - 3.0 * s2 + 1.0) * f0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * f1
            + (s3 - s2) * d1;
        (1.0 - f / self.total).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone)]
pub struct DyadicPartition {
    grid: Grid,
    j_max: i32,
    chi: Arc<ChiProfile>,
    /// `weights[j + 1][flat]` is `psi_j` at that mode (zero outside the band).
    weights: Vec<Vec<f64>>,
}

impl DyadicPartition {
    pub fn new(grid: &Grid) -> Result<Self> {
        let j_max = grid.retained_radius().log2().floor() as i32;
        if j_max < 1 {
            return Err(Error::Config(format!(
                "grid (n = {}, L = {}) cannot host dyadic shell j = 1",
                grid.points_per_axis(),
                grid.side_length()
            )));
        }
        let chi = ChiProfile::shared();
        let mask = grid.retained_mask();
        let radii = grid.wavenumbers();
        let mut weights = Vec::with_capacity((j_max + 2) as usize);
        for j in -1..=j_max {
            let w = radii
                .iter()
                .zip(&mask)
                .map(|(&r, &keep)| if keep { shell_value(&chi, j, j_max, r) } else { 0.0 })
                .collect();
            weights.push(w);
        }
        Ok(Self { grid: *grid, j_max, chi, weights })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn shells(&self) -> std::ops::RangeInclusive<i32> {
        -1..=self.j_max
    }

    pub fn chi(&self, r: f64) -> f64 {
        self.chi.eval(r)
    }

    /// `psi_j(|xi|)` for an arbitrary radius, with the top-shell remainder rule.
    pub fn psi(&self, j: i32, r: f64) -> f64 {
        shell_value(&self.chi, j, self.j_max, r)
    }

    /// Tabulated shell weights over grid modes.
    pub fn weights(&self, j: i32) -> Result<&[f64]> {
        self.check_shell(j)?;
        Ok(&self.weights[(j + 1) as usize])
    }

    pub(crate) fn check_shell(&self, j: i32) -> Result<()> {
        if j < -1 || j > self.j_max {
            return Err(Error::Argument(format!("shell {j} outside [-1, {}]", self.j_max)));
        }
        Ok(())
    }
}

fn shell_value(chi: &ChiProfile, j: i32, j_max: i32, r: f64) -> f64 {
    match j {
        -1 => chi.eval(2.0 * r),
        _ if j == j_max => 1.0 - chi.eval(r * 2f64.powi(1 - j)),
        _ => chi.eval(r * 2f64.powi(-j)) - chi.eval(r * 2f64.powi(1 - j)),
    }
}
