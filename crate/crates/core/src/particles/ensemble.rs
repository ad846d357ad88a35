//! Particle ensembles on the periodic box.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{arg, Result};
use crate::grid::Grid;
use crate::stable::StreamKey;

const INIT_DOMAIN: u64 = 0x696e_6974;

/// `N` particles on the torus of `grid`; particle `i` draws noise on lane `lanes[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    grid: Grid,
    /// `N * dim` coordinates, particle-major, wrapped into `[-L/2, L/2)`.
    positions: Vec<f64>,
    lanes: Vec<u64>,
    pub t: f64,
    pub step: u64,
    pub base: StreamKey,
}

impl Ensemble {
    /// Lanes default to `0..N`.
    pub fn new(grid: Grid, positions: Vec<f64>, base: StreamKey) -> Result<Self> {
        let d = grid.dim();
        if positions.is_empty() || !positions.len().is_multiple_of(d) {
            return arg(format!("positions must hold N * {d} coordinates with N >= 1"));
        }
        let lanes = (0..(positions.len() / d) as u64).collect();
        Self::with_lanes(grid, positions, lanes, base)
    }

    pub fn with_lanes(grid: Grid, mut positions: Vec<f64>, lanes: Vec<u64>, base: StreamKey) -> Result<Self> {
        if lanes.len() * grid.dim() != positions.len() || lanes.is_empty() {
            return arg("one lane per particle required");
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return arg("particle positions must be finite");
        }
        positions.iter_mut().for_each(|x| *x = grid.wrap(*x));
        Ok(Self { grid, positions, lanes, t: 0.0, step: 0, base })
    }

    /// Independent wrapped Gaussians `N(center, width^2 I)`, keyed by `(base, lane)`.
    pub fn gaussian(grid: Grid, count: usize, center: &[f64], width: f64, base: StreamKey) -> Result<Self> {
        let d = grid.dim();
        if center.len() != d || !(width >= 0.0) {
            return arg("gaussian initializer needs a dim-vector center and nonnegative width");
        }
        let key = base.derive(INIT_DOMAIN);
        let mut positions = Vec::with_capacity(count * d);
        for i in 0..count {
            let mut rng = key.with_lane(i as u64).rng();
            for c in center {
                positions.push(c + width * rng.sample::<f64, _>(StandardNormal));
            }
        }
        Self::new(grid, positions, base)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.lanes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.positions[i * d..(i + 1) * d]
    }

    pub fn lanes(&self) -> &[u64] {
        &self.lanes
    }

    pub(crate) fn set_positions(&mut self, positions: Vec<f64>) {
        debug_assert_eq!(positions.len(), self.positions.len());
        self.positions = positions;
    }

    /// Reorder particles (with their lanes): new particle `k` is old particle `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return arg("not a permutation of the particle indices");
        }
        let positions = perm.iter().flat_map(|&p| self.position(p).to_vec()).collect();
        let lanes = perm.iter().map(|&p| self.lanes[p]).collect();
        Ok(Self { positions, lanes, ..self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_are_wrapped() {
        let g = Grid::unit_1d(32).unwrap();
        let e = Ensemble::new(g, vec![4.0, -7.0, 0.5], StreamKey::new(1, 0, 0)).unwrap();
        for &x in e.positions() {
            assert!((-std::f64::consts::PI..std::f64::consts::PI).contains(&x));
        }
        assert_eq!(e.len(), 3);
        assert_eq!(e.lanes(), &[0, 1, 2]);
    }

    #[test]
    fn gaussian_init_is_keyed() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let a = Ensemble::gaussian(g, 50, &[0.0, 0.5], 0.3, StreamKey::new(9, 0, 0)).unwrap();
        let b = Ensemble::gaussian(g, 50, &[0.0, 0.5], 0.3, StreamKey::new(9, 0, 0)).unwrap();
        let c = Ensemble::gaussian(g, 50, &[0.0, 0.5], 0.3, StreamKey::new(10, 0, 0)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.positions(), c.positions());
        assert!(Ensemble::gaussian(g, 5, &[0.0], 0.3, StreamKey::new(9, 0, 0)).is_err());
    }

    #[test]
    fn permutation_checks() {
        let g = Grid::unit_1d(32).unwrap();
        let e = Ensemble::new(g, vec![0.1, 0.2, 0.3], StreamKey::new(1, 0, 0)).unwrap();
        let p = e.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.positions(), &[0.3, 0.1, 0.2]);
        assert_eq!(p.lanes(), &[2, 0, 1]);
        assert!(e.permuted(&[0, 0, 1]).is_err());
    }
}
