//! Periodic sample grids and grid functions.
//!
//! The torus `[-L/2, L/2)^dim` is sampled at `n` points per axis, node `i`
//! sitting at `-L/2 + i*h`. Flat indices are row-major with axis 0 slowest.
//! Discrete frequencies are integer multiples of `2*pi/L`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    side: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, side: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Config(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if n < MIN_POINTS || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "points per axis must be a power of two >= {MIN_POINTS}, got {n}"
            )));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::Config(format!("side length must be positive, got {side}")));
        }
        Ok(Self { dim, n, side })
    }

    /// One-dimensional grid on `[-pi, pi)`.
    pub fn unit_1d(n: usize) -> Result<Self> {
        Self::new(1, n, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn side_length(&self) -> f64 {
        self.side
    }

    /// Total number of nodes, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn fundamental(&self) -> f64 {
        2.0 * PI / self.side
    }

    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.side
    }

    /// Radius of the retained (dealiased) frequency band, two thirds of Nyquist.
    pub fn retained_radius(&self) -> f64 {
        self.nyquist() * 2.0 / 3.0
    }

    /// Per-axis multi-index of a flat index.
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            1 => [flat, 0],
            _ => [flat / self.n, flat % self.n],
        }
    }

    pub fn flatten(&self, idx: [usize; 2]) -> usize {
        match self.dim {
            1 => idx[0],
            _ => idx[0] * self.n + idx[1],
        }
    }

    pub fn axis_coordinate(&self, i: usize) -> f64 {
        -0.5 * self.side + i as f64 * self.spacing()
    }

    /// Physical coordinates of a node; unused trailing entries are zero.
    pub fn coordinate(&self, flat: usize) -> [f64; 2] {
        let idx = self.unflatten(flat);
        let mut x = [0.0; 2];
        for a in 0..self.dim {
            x[a] = self.axis_coordinate(idx[a]);
        }
        x
    }

    /// Flat index of the node at the origin.
    pub fn origin_index(&self) -> usize {
        self.flatten([self.n / 2, if self.dim == 2 { self.n / 2 } else { 0 }])
    }

    /// Signed DFT index in `[-n/2, n/2)`.
    pub fn signed_mode(&self, m: usize) -> i64 {
        let half = (self.n / 2) as i64;
        let m = m as i64;
        if m >= half {
            m - self.n as i64
        } else {
            m
        }
    }

    pub fn wavevector(&self, flat: usize) -> [f64; 2] {
        let idx = self.unflatten(flat);
        let k0 = self.fundamental();
        let mut k = [0.0; 2];
        for a in 0..self.dim {
            k[a] = k0 * self.signed_mode(idx[a]) as f64;
        }
        k
    }

    pub fn wavenumber(&self, flat: usize) -> f64 {
        let k = self.wavevector(flat);
        (k[0] * k[0] + k[1] * k[1]).sqrt()
    }

    /// `|xi|` for every mode, in flat order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.len()).map(|f| self.wavenumber(f)).collect()
    }

    /// True when the mode lies inside the two-thirds band and is not a Nyquist mode.
    pub fn is_retained(&self, flat: usize) -> bool {
        let idx = self.unflatten(flat);
        if idx[..self.dim].contains(&(self.n / 2)) {
            return false;
        }
        self.wavenumber(flat) <= self.retained_radius() * (1.0 + 1e-12)
    }

    pub fn retained_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|f| self.is_retained(f)).collect()
    }

    /// Wrap a coordinate into `[-L/2, L/2)`; in-range values are returned unchanged.
    pub fn wrap(&self, x: f64) -> f64 {
        let half = 0.5 * self.side;
        if (-half..half).contains(&x) {
            return x;
        }
        let y = x - self.side * ((x + half) / self.side).floor();
        if y >= half {
            y - self.side
        } else if y < -half {
            y + self.side
        } else {
            y
        }
    }

    /// Minimal-image displacement along one axis.
    pub fn min_image(&self, dx: f64) -> f64 {
        dx - self.side * (dx / self.side).round()
    }

    /// Torus distance between two points with `dim` coordinates.
    pub fn torus_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .take(self.dim)
            .map(|(x, y)| self.min_image(x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Grid function with one or more components, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    components: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::Argument("field needs at least one component".into()));
        }
        if values.len() != components * grid.len() {
            return Err(Error::Argument(format!(
                "field expects {} values, got {}",
                components * grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, components, values })
    }

    pub fn scalar(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, 1, values)
    }

    pub fn zeros(grid: Grid, components: usize) -> Self {
        Self { grid, components, values: vec![0.0; components.max(1) * grid.len()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, components: 1, values: vec![c; grid.len()] }
    }

    /// Scalar field sampled from `f(x)` with `x` of length `dim`.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let d = grid.dim();
        let values = (0..grid.len()).map(|i| f(&grid.coordinate(i)[..d])).collect();
        Self { grid, components: 1, values }
    }

    /// Assemble a vector field from scalar component fields on one grid.
    pub fn stack(parts: &[Field]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Argument("no components".into()))?;
        let mut values = Vec::with_capacity(parts.len() * first.grid.len());
        for p in parts {
            if p.grid != first.grid || p.components != 1 {
                return Err(Error::Argument("stack expects scalar fields on one grid".into()));
            }
            values.extend_from_slice(&p.values);
        }
        Self::new(first.grid, parts.len(), values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[c * m..(c + 1) * m]
    }

    pub fn component_field(&self, c: usize) -> Field {
        Field { grid: self.grid, components: 1, values: self.component(c).to_vec() }
    }

    pub(crate) fn require_scalar(&self, what: &str) -> Result<()> {
        if self.components != 1 {
            return Err(Error::Argument(format!("{what} expects a scalar field")));
        }
        Ok(())
    }

    pub(crate) fn require_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Argument("fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid, components: self.components, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    /// Pointwise `self - other`.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.require_same_grid(other)?;
        if self.components != other.components {
            return Err(Error::Argument("component count mismatch".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Field { grid: self.grid, components: self.components, values })
    }

    /// Cell-volume weighted L^p norm of a scalar field; `p = inf` is the grid max.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(&self.values, self.grid.cell_volume(), p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Grid quadrature of a scalar field.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Grid quadrature of the pointwise product of two scalar fields.
    pub fn pairing(&self, other: &Field) -> Result<f64> {
        self.require_same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_volume())
    }
}

pub(crate) fn lp_norm(values: &[f64], cell: f64, p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        values.iter().map(|v| v.abs()).sum::<f64>() * cell
    } else if p == 2.0 {
        (values.iter().map(|v| v * v).sum::<f64>() * cell).sqrt()
    } else {
        (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(3, 64, 1.0).is_err());
        assert!(Grid::new(1, 8, 1.0).is_err());
        assert!(Grid::new(1, 48, 1.0).is_err());
        assert!(Grid::new(1, 64, 0.0).is_err());
        assert!(Grid::new(2, 16, 2.0).is_ok());
    }

    #[test]
    fn origin_and_wavenumbers() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        assert_eq!(g.coordinate(g.origin_index()), [0.0, 0.0]);
        let f = g.flatten([1, 15]);
        assert_eq!(g.wavevector(f), [1.0, -1.0]);
        assert!(!g.is_retained(g.flatten([8, 0])));
        assert!(g.is_retained(g.flatten([5, 0])));
        assert!(!g.is_retained(g.flatten([6, 0])));
    }

    #[test]
    fn wrapping_and_distance() {
        let g = Grid::unit_1d(64).unwrap();
        assert!((g.wrap(PI + 0.5) - (-PI + 0.5)).abs() < 1e-12);
        assert_eq!(g.wrap(PI), -PI);
        assert!((g.torus_distance(&[3.0], &[-3.0]) - (2.0 * PI - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn field_size_checked() {
        let g = Grid::unit_1d(16).unwrap();
        assert!(Field::new(g, 2, vec![0.0; 16]).is_err());
        assert!(Field::new(g, 2, vec![0.0; 32]).is_ok());
    }
}
