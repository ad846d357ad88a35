//! Interaction kernels `K` and the drift `B = K * rho`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::fft;
use crate::grid::{Field, Grid};
use crate::spectral::synth_besov_field;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelKind {
    /// `K = 0`: free fractional heat flow.
    Zero,
    /// Gradient of the normalized Gaussian of standard deviation `width` (attractive).
    SmoothGaussianGradient { width: f64 },
    /// Each component is `amplitude` times an independent lacunary `C^beta` field.
    SyntheticBesov { beta: f64, seed: u64, amplitude: f64 },
    /// A vector field given on the grid, one component per axis.
    Custom(Field),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Reserved; time-dependent kernels are not supported.
    pub time_dependent: bool,
}

/// Serializable description of the non-custom kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelDescriptor {
    Zero,
    SmoothGaussianGradient { width: f64 },
    SyntheticBesov { beta: f64, seed: u64, amplitude: f64 },
}

impl From<KernelDescriptor> for KernelSpec {
    fn from(d: KernelDescriptor) -> Self {
        let kind = match d {
            KernelDescriptor::Zero => KernelKind::Zero,
            KernelDescriptor::SmoothGaussianGradient { width } => KernelKind::SmoothGaussianGradient { width },
            KernelDescriptor::SyntheticBesov { beta, seed, amplitude } => {
                KernelKind::SyntheticBesov { beta, seed, amplitude }
            }
        };
        KernelSpec::new(kind)
    }
}

impl KernelSpec {
    pub fn new(kind: KernelKind) -> Self {
        Self { kind, time_dependent: false }
    }

    pub fn zero() -> Self {
        Self::new(KernelKind::Zero)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, KernelKind::Zero)
    }

    /// Synthetic kernels with `beta <= 0` are generated but not validated for the solver.
    pub fn is_experimental(&self) -> bool {
        matches!(self.kind, KernelKind::SyntheticBesov { beta, .. } if beta <= 0.0)
    }

    /// Target regularity carried by the kernel, if any.
    pub fn regularity(&self) -> Option<f64> {
        match self.kind {
            KernelKind::SyntheticBesov { beta, .. } => Some(beta),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.time_dependent {
            return arg("time-dependent kernels are not supported");
        }
        match &self.kind {
            KernelKind::SmoothGaussianGradient { width } if !(*width > 0.0) => {
                arg(format!("kernel width must be positive, got {width}"))
            }
            KernelKind::SyntheticBesov { amplitude, .. } if !amplitude.is_finite() => arg("kernel amplitude must be finite"),
            _ => Ok(()),
        }
    }

    /// Sample the kernel on `grid` as a vector field with `dim` components.
    pub fn field(&self, grid: &Grid) -> Result<Field> {
        self.validate()?;
        let d = grid.dim();
        match &self.kind {
            KernelKind::Zero => Ok(Field::zeros(*grid, d)),
            KernelKind::SmoothGaussianGradient { width } => {
                let w2 = width * width;
                let norm = (2.0 * PI * w2).powf(-0.5 * d as f64);
                let side = grid.side_length();
                let parts: Vec<Field> = (0..d)
                    .map(|axis| {
                        Field::from_fn(*grid, |x| {
                            // sum over the nearest periodic images
                            let mut acc = 0.0;
                            for i0 in -1..=1 {
                                for i1 in if d == 2 { -1..=1 } else { 0..=0 } {
                                    let z = [x[0] + i0 as f64 * side, if d == 2 { x[1] + i1 as f64 * side } else { 0.0 }];
                                    let r2 = z[0] * z[0] + z[1] * z[1];
                                    acc += -z[axis] / w2 * norm * (-0.5 * r2 / w2).exp();
                                }
                            }
                            acc
                        })
                    })
                    .collect();
                Field::stack(&parts)
            }
            KernelKind::SyntheticBesov { beta, seed, amplitude } => {
                let parts: Vec<Field> = (0..d)
                    .map(|c| synth_besov_field(*beta, seed.wrapping_add(c as u64), grid).map(|f| f.scale(*amplitude)))
                    .collect::<Result<_>>()?;
                Field::stack(&parts)
            }
            KernelKind::Custom(f) => {
                if f.grid() != grid || f.components() != d {
                    return arg("custom kernel must be a dim-component field on the solver grid");
                }
                Ok(f.clone())
            }
        }
    }

    /// Convolution multipliers `hat K_c`, scaled so that multiplying DFT data of
    /// `rho` yields DFT data of `K_c * rho`; band-limited to the retained band.
    pub(crate) fn multipliers(&self, grid: &Grid) -> Result<Vec<Vec<Complex64>>> {
        let k = self.field(grid)?;
        let cell = grid.cell_volume();
        Ok((0..k.components())
            .map(|c| {
                let mut s = fft::forward(grid, k.component(c));
                for (m, z) in s.iter_mut().enumerate() {
                    *z = if grid.is_retained(m) { *z * (cell * fft::origin_phase(grid, m)) } else { Complex64::default() };
                }
                s
            })
            .collect())
    }
}

/// `B = K * rho`, computed spectrally per component and dealiased.
pub fn drift_field(kernel: &KernelSpec, rho: &Field) -> Result<Field> {
    rho.require_scalar("drift_field")?;
    let grid = *rho.grid();
    let mut rho_hat = fft::forward(&grid, rho.values());
    fft::project(&grid, &mut rho_hat);
    let mults = kernel.multipliers(&grid)?;
    let mut values = Vec::with_capacity(grid.dim() * grid.len());
    for m in &mults {
        let s: Vec<Complex64> = rho_hat.iter().zip(m).map(|(a, b)| a * b).collect();
        values.extend(fft::inverse(&grid, &s));
    }
    Field::new(grid, grid.dim(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{besov_norm, BesovIndex, DyadicPartition};

    #[test]
    fn zero_kernel_zero_drift() {
        let g = Grid::unit_1d(64).unwrap();
        let rho = Field::constant(g, 1.0 / (2.0 * PI));
        let b = drift_field(&KernelSpec::zero(), &rho).unwrap();
        assert_eq!(b.sup_norm(), 0.0);
    }

    #[test]
    fn custom_kernel_grid_mismatch() {
        let g = Grid::unit_1d(64).unwrap();
        let other = Grid::unit_1d(32).unwrap();
        let k = KernelSpec::new(KernelKind::Custom(Field::zeros(other, 1)));
        assert!(drift_field(&k, &Field::constant(g, 1.0)).is_err());
    }

    #[test]
    fn narrow_bump_kernel_matches_quadrature() {
        // K = c * normalized narrow bump: B(x) = c * int bump(x - y) rho(y) dy ~ c * rho(x)
        let g = Grid::unit_1d(64).unwrap();
        let w = 0.15;
        let bump = Field::from_fn(g, |x| (-x[0] * x[0] / (2.0 * w * w)).exp() / (2.0 * PI * w * w).sqrt());
        let k = KernelSpec::new(KernelKind::Custom(bump.scale(0.7)));
        let rho = Field::from_fn(g, |x| (1.0 + 0.5 * x[0].cos() + 0.2 * (2.0 * x[0]).sin()) / (2.0 * PI));
        let b = drift_field(&k, &rho).unwrap();
        let h = g.spacing();
        let n = g.points_per_axis();
        for i in 0..n {
            let x = g.axis_coordinate(i);
            let direct: f64 = (0..n)
                .map(|j| {
                    let y = g.axis_coordinate(j);
                    let z = g.min_image(x - y);
                    0.7 * (-z * z / (2.0 * w * w)).exp() / (2.0 * PI * w * w).sqrt() * rho.values()[j] * h
                })
                .sum();
            assert!((b.values()[i] - direct).abs() < 1e-10, "node {i}");
            assert!((b.values()[i] - 0.7 * rho.values()[i]).abs() < 0.02);
        }
    }

    #[test]
    fn synthetic_kernel_regularity_band() {
        let g = Grid::new(2, 64, 2.0 * PI).unwrap();
        let k = KernelSpec::new(KernelKind::SyntheticBesov { beta: 0.3, seed: 4, amplitude: 0.5 });
        let f = k.field(&g).unwrap();
        let p = DyadicPartition::new(&g).unwrap();
        for c in 0..2 {
            let v = besov_norm(&f.component_field(c), BesovIndex::holder(0.3), &p).unwrap();
            assert!((0.5 / 4.0..=0.5 * 4.0).contains(&v), "component {c}: {v}");
        }
        assert!(!k.is_experimental());
        assert!(KernelSpec::new(KernelKind::SyntheticBesov { beta: -0.2, seed: 1, amplitude: 1.0 }).is_experimental());
    }

    #[test]
    fn gaussian_gradient_points_inward() {
        let g = Grid::unit_1d(128).unwrap();
        let k = KernelSpec::new(KernelKind::SmoothGaussianGradient { width: 0.3 }).field(&g).unwrap();
        for i in 0..128 {
            let x = g.axis_coordinate(i);
            if x.abs() > 1e-12 && x.abs() < 2.0 {
                assert!(k.values()[i] * x < 0.0);
            }
        }
    }
}
