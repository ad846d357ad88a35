//! Fourier multipliers, convolution and the inequality harness statistics.

use num_complex::Complex64;

use crate::error::{arg, Error, Result};
use crate::fft;
use crate::grid::{lp_norm, Field, Grid};
use crate::spectral::partition::DyadicPartition;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return arg(format!("stability index must lie in (0, 2], got {alpha}"));
    }
    Ok(())
}

/// Symbol of the fractional Laplacian, `-|xi|^alpha`, on every mode.
pub fn frac_laplacian_symbol(grid: &Grid, alpha: f64) -> Vec<f64> {
    grid.wavenumbers().into_iter().map(|k| if k == 0.0 { 0.0 } else { -k.powf(alpha) }).collect()
}

fn apply_real_multiplier(f: &Field, m: &[f64]) -> Field {
    let grid = *f.grid();
    let mut values = Vec::with_capacity(f.values().len());
    for c in 0..f.components() {
        let mut s = fft::forward(&grid, f.component(c));
        for (z, &w) in s.iter_mut().zip(m) {
            *z *= w;
        }
        values.extend(fft::inverse(&grid, &s));
    }
    Field::new(grid, f.components(), values).expect("shape preserved")
}

/// `Delta^{alpha/2} f`, the multiplier `-|xi|^alpha`.
pub fn frac_laplacian(f: &Field, alpha: f64) -> Result<Field> {
    check_alpha(alpha)?;
    f.require_scalar("frac_laplacian")?;
    Ok(apply_real_multiplier(f, &frac_laplacian_symbol(f.grid(), alpha)))
}

/// Multiplier of `d/dx_axis`; Nyquist modes map to zero so real data stays real.
pub fn derivative_symbol(grid: &Grid, axis: usize) -> Vec<Complex64> {
    let n = grid.points_per_axis();
    (0..grid.len())
        .map(|f| {
            let idx = grid.unflatten(f);
            if idx[axis] == n / 2 {
                Complex64::default()
            } else {
                Complex64::new(0.0, grid.wavevector(f)[axis])
            }
        })
        .collect()
}

/// Spectral partial derivative of a scalar field.
pub fn derivative(f: &Field, axis: usize) -> Result<Field> {
    f.require_scalar("derivative")?;
    let grid = *f.grid();
    if axis >= grid.dim() {
        return arg(format!("axis {axis} out of range"));
    }
    let sym = derivative_symbol(&grid, axis);
    let mut s = fft::forward(&grid, f.values());
    for (z, w) in s.iter_mut().zip(&sym) {
        *z *= w;
    }
    Field::scalar(grid, fft::inverse(&grid, &s))
}

/// Spectral gradient, one component per axis.
pub fn gradient(f: &Field) -> Result<Field> {
    let parts: Vec<Field> = (0..f.grid().dim()).map(|a| derivative(f, a)).collect::<Result<_>>()?;
    Field::stack(&parts)
}

/// Periodic convolution `f * g` weighted by the cell volume.
///
/// `f` may carry several components; `g` must be scalar. Convolving with the
/// unit-mass delta at the origin node is the identity.
pub fn convolve(f: &Field, g: &Field) -> Result<Field> {
    f.require_same_grid(g)?;
    g.require_scalar("convolve (second argument)")?;
    let grid = *f.grid();
    let cell = grid.cell_volume();
    let g_hat: Vec<Complex64> = fft::forward(&grid, g.values())
        .into_iter()
        .enumerate()
        .map(|(m, z)| z * (cell * fft::origin_phase(&grid, m)))
        .collect();
    let mut values = Vec::with_capacity(f.values().len());
    for c in 0..f.components() {
        let mut s = fft::forward(&grid, f.component(c));
        for (z, w) in s.iter_mut().zip(&g_hat) {
            *z *= w;
        }
        values.extend(fft::inverse(&grid, &s));
    }
    Field::new(grid, f.components(), values)
}

/// Pointwise Frobenius norm of the `k`-th derivative tensor of spectral data.
fn derivative_tensor_magnitude(grid: &Grid, spectrum: &[Complex64], k: u32) -> Vec<f64> {
    let d = grid.dim();
    let symbols: Vec<Vec<Complex64>> = (0..d).map(|a| derivative_symbol(grid, a)).collect();
    let mut acc = vec![0.0; grid.len()];
    let count = d.pow(k);
    for multi in 0..count {
        let mut s = spectrum.to_vec();
        let mut rest = multi;
        for _ in 0..k {
            let axis = rest % d;
            rest /= d;
            for (z, w) in s.iter_mut().zip(&symbols[axis]) {
                *z *= w;
            }
        }
        for (a, v) in acc.iter_mut().zip(fft::inverse(grid, &s)) {
            *a += v * v;
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// `||grad^k R_j f||_{p2} / (2^{(k + d(1/p1 - 1/p2)) j} ||R_j f||_{p1})`.
///
/// Returns 0 when the block is (numerically) empty.
pub fn bernstein_ratio(f: &Field, j: i32, k: u32, p1: f64, p2: f64, part: &DyadicPartition) -> Result<f64> {
    f.require_scalar("bernstein_ratio")?;
    if !(p1 >= 1.0 && p2 >= p1) {
        return arg(format!("need 1 <= p1 <= p2, got ({p1}, {p2})"));
    }
    let grid = *part.grid();
    f.require_same_grid(&Field::zeros(grid, 1))?;
    let w = part.weights(j)?;
    let cell = grid.cell_volume();
    let mut s = fft::forward(&grid, f.values());
    for (z, &wj) in s.iter_mut().zip(w) {
        *z *= wj;
    }
    let block = fft::inverse(&grid, &s);
    let base = lp_norm(&block, cell, p1);
    if base <= 1e-12 * lp_norm(f.values(), cell, p1) || base == 0.0 {
        return Ok(0.0);
    }
    let top = lp_norm(&derivative_tensor_magnitude(&grid, &s, k), cell, p2);
    let d = grid.dim() as f64;
    let inv = |p: f64| if p.is_infinite() { 0.0 } else { 1.0 / p };
    let scale = 2f64.powf((k as f64 + d * (inv(p1) - inv(p2))) * j as f64);
    Ok(top / (scale * base))
}

/// Sparse trigonometric polynomial used to evaluate band-limited data off the grid.
struct TrigPoly {
    origin: f64,
    terms: Vec<([f64; 2], Complex64)>,
    norm: f64,
    dim: usize,
}

impl TrigPoly {
    fn new(grid: &Grid, spectrum: &[Complex64]) -> Self {
        let terms = spectrum
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() > 0.0)
            .map(|(f, &z)| (grid.wavevector(f), z))
            .collect();
        Self { origin: -0.5 * grid.side_length(), terms, norm: 1.0 / grid.len() as f64, dim: grid.dim() }
    }

    /// Value, gradient and Hessian at `x`.
    fn eval(&self, x: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let (mut v, mut g, mut h) = (0.0, [0.0; 2], [[0.0; 2]; 2]);
        for (k, z) in &self.terms {
            let phase = k[0] * (x[0] - self.origin) + k[1] * (x[1] - if self.dim == 2 { self.origin } else { 0.0 });
            let e = z * Complex64::new(phase.cos(), phase.sin());
            v += e.re;
            // d/dx e^{ik.x} = i k e^{ik.x}
            for a in 0..2 {
                g[a] -= k[a] * e.im;
                for b in 0..2 {
                    h[a][b] -= k[a] * k[b] * e.re;
                }
            }
        }
        let s = self.norm;
        (v * s, [g[0] * s, g[1] * s], [[h[0][0] * s, h[0][1] * s], [h[1][0] * s, h[1][1] * s]])
    }

    fn value(&self, x: [f64; 2]) -> f64 {
        self.eval(x).0
    }
}

/// Frequency-localized maximum-principle statistic
/// `sgn(R_j u(x*)) (-Delta)^{alpha/2} R_j u(x*) / (2^{alpha j} ||R_j u||_inf)`.
///
/// `x*` is the grid argmax of `|R_j u|`, polished by Newton steps on the
/// band-limited interpolant so the statistic is evaluated at the true peak.
pub fn max_principle_stat(u: &Field, j: i32, alpha: f64, part: &DyadicPartition) -> Result<f64> {
    u.require_scalar("max_principle_stat")?;
    check_alpha(alpha)?;
    if j < 0 {
        return arg("maximum principle statistic needs j >= 0");
    }
    let grid = *part.grid();
    let w = part.weights(j)?;
    let mut s = fft::forward(&grid, u.values());
    for (z, &wj) in s.iter_mut().zip(w) {
        *z *= wj;
    }
    let block = fft::inverse(&grid, &s);
    let (imax, peak) = block
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
    if peak < 1e-14 {
        return Err(Error::Degenerate(format!("||R_{j} u||_inf = {peak:e} below 1e-14")));
    }
    let poly = TrigPoly::new(&grid, &s);
    let sign = block[imax].signum();
    let x_star = polish_peak(&poly, grid.coordinate(imax), sign, grid.spacing(), grid.dim());
    let peak_value = poly.value(x_star);
    let lifted: Vec<Complex64> = s
        .iter()
        .enumerate()
        .map(|(f, z)| z * grid.wavenumber(f).powf(alpha))
        .collect();
    let frac = TrigPoly::new(&grid, &lifted).value(x_star);
    Ok(sign * frac / (2f64.powf(alpha * j as f64) * peak_value.abs()))
}

fn polish_peak(poly: &TrigPoly, start: [f64; 2], sign: f64, h: f64, dim: usize) -> [f64; 2] {
    let mut x = start;
    let mut best = sign * poly.value(x);
    for _ in 0..30 {
        let (_, g, hess) = poly.eval(x);
        // Newton step on sign*g, which is locally concave near the peak
        let step = if dim == 1 {
            if hess[0][0] * sign >= 0.0 {
                break;
            }
            [-g[0] / hess[0][0], 0.0]
        } else {
            let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
            if det.abs() < 1e-300 {
                break;
            }
            [
                -(hess[1][1] * g[0] - hess[0][1] * g[1]) / det,
                -(-hess[1][0] * g[0] + hess[0][0] * g[1]) / det,
            ]
        };
        let len = (step[0] * step[0] + step[1] * step[1]).sqrt();
        let scale = if len > h { h / len } else { 1.0 };
        let cand = [x[0] + scale * step[0], x[1] + scale * step[1]];
        let val = sign * poly.value(cand);
        if val <= best {
            break;
        }
        best = val;
        x = cand;
        if len * scale < 1e-13 * h.max(1.0) {
            break;
        }
    }
    x
}

/// `R_j(b g) - b R_j(g)` for scalar fields on one grid.
///
/// Inputs are band-limited before the products are formed.
pub fn commutator_apply(b: &Field, g: &Field, j: i32, part: &DyadicPartition) -> Result<Field> {
    b.require_scalar("commutator_apply")?;
    g.require_scalar("commutator_apply")?;
    b.require_same_grid(g)?;
    let grid = *part.grid();
    b.require_same_grid(&Field::zeros(grid, 1))?;
    part.check_shell(j)?;
    let first = b.values()[0];
    if b.values().iter().all(|&v| v == first) {
        // constants commute with every Fourier multiplier
        return Ok(Field::zeros(grid, 1));
    }
    let bp = fft::project_values(&grid, b.values());
    let gp = fft::project_values(&grid, g.values());
    let prod: Vec<f64> = bp.iter().zip(&gp).map(|(x, y)| x * y).collect();
    let w = part.weights(j)?;
    let block = |v: &[f64]| {
        let mut s = fft::forward(&grid, v);
        for (z, &wj) in s.iter_mut().zip(w) {
            *z *= wj;
        }
        fft::inverse(&grid, &s)
    };
    let left = block(&prod);
    let rg = block(&gp);
    let values = left.iter().zip(bp.iter().zip(&rg)).map(|(l, (bv, r))| l - bv * r).collect();
    Field::scalar(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn frac_laplacian_rejects_alpha() {
        let g = Grid::unit_1d(32).unwrap();
        let f = Field::constant(g, 1.0);
        assert!(frac_laplacian(&f, 0.0).is_err());
        assert!(frac_laplacian(&f, 2.5).is_err());
        assert!(frac_laplacian(&f, 1.3).unwrap().sup_norm() < 1e-15);
    }

    #[test]
    fn frac_laplacian_eigenfunction() {
        let g = Grid::new(2, 64, 2.0 * PI).unwrap();
        for alpha in [0.4, 1.0, 1.7, 2.0] {
            let f = Field::from_fn(g, |x| (3.0 * x[0] - 4.0 * x[1]).cos());
            let lf = frac_laplacian(&f, alpha).unwrap();
            let expect = f.scale(-5f64.powf(alpha));
            let err = lf.sub(&expect).unwrap().sup_norm() / expect.sup_norm();
            assert!(err < 1e-12, "alpha = {alpha}: {err}");
        }
    }

    #[test]
    fn laplacian_matches_finite_differences() {
        // centered second differences of a Gaussian bump: O(h^2) agreement
        let mut errs = vec![];
        for n in [64usize, 128, 256] {
            let g = Grid::unit_1d(n).unwrap();
            let f = Field::from_fn(g, |x| (-x[0] * x[0] / 0.5).exp());
            let lf = frac_laplacian(&f, 2.0).unwrap();
            let h = g.spacing();
            let v = f.values();
            let fd: Vec<f64> = (0..n).map(|i| (v[(i + 1) % n] - 2.0 * v[i] + v[(i + n - 1) % n]) / (h * h)).collect();
            let err = lf.values().iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn convolution_with_delta_is_identity() {
        let g = Grid::new(2, 32, 2.0 * PI).unwrap();
        let f = Field::from_fn(g, |x| (x[0]).sin() + (2.0 * x[1]).cos() + 0.3);
        let mut d = vec![0.0; g.len()];
        d[g.origin_index()] = 1.0 / g.cell_volume();
        let delta = Field::scalar(g, d).unwrap();
        let c = convolve(&f, &delta).unwrap();
        assert!(c.sub(&f).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn gaussian_convolution_adds_variances() {
        let g = Grid::new(1, 256, 20.0).unwrap();
        let gauss = |v: f64| Field::from_fn(g, move |x| (-x[0] * x[0] / (2.0 * v)).exp() / (2.0 * PI * v).sqrt());
        let (a, b) = (0.4, 0.7);
        let c = convolve(&gauss(a), &gauss(b)).unwrap();
        let err = c.sub(&gauss(a + b)).unwrap().sup_norm();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn convolution_grid_mismatch() {
        let a = Field::zeros(Grid::unit_1d(32).unwrap(), 1);
        let b = Field::zeros(Grid::unit_1d(64).unwrap(), 1);
        assert!(convolve(&a, &b).is_err());
    }

    #[test]
    fn bernstein_plane_wave_and_empty_block() {
        let g = Grid::unit_1d(256).unwrap();
        let p = DyadicPartition::new(&g).unwrap();
        for j in 0..=p.j_max() {
            let f = Field::from_fn(g, |x| (2f64.powi(j) * x[0]).cos());
            let r = bernstein_ratio(&f, j, 1, f64::INFINITY, f64::INFINITY, &p).unwrap();
            assert!((r - 1.0).abs() < 1e-9, "j = {j}: {r}");
        }
        let c = Field::constant(g, 1.0);
        assert_eq!(bernstein_ratio(&c, 3, 1, 1.0, f64::INFINITY, &p).unwrap(), 0.0);
        assert!(bernstein_ratio(&c, 3, 1, 2.0, 1.0, &p).is_err());
    }

    #[test]
    fn max_principle_plane_wave() {
        let g = Grid::unit_1d(256).unwrap();
        let p = DyadicPartition::new(&g).unwrap();
        for j in 0..p.j_max() {
            let f = Field::from_fn(g, |x| (2f64.powi(j) * x[0] + 0.3).cos());
            for alpha in [0.5, 1.0, 1.5] {
                let s = max_principle_stat(&f, j, alpha, &p).unwrap();
                assert!((s - 1.0).abs() < 1e-9, "j = {j}, alpha = {alpha}: {s}");
            }
        }
        let c = Field::constant(g, 1.0);
        assert!(matches!(max_principle_stat(&c, 2, 1.0, &p), Err(Error::Degenerate(_))));
        assert!(max_principle_stat(&c, -1, 1.0, &p).is_err());
    }

    #[test]
    fn commutator_with_constant_is_zero() {
        let g = Grid::unit_1d(64).unwrap();
        let p = DyadicPartition::new(&g).unwrap();
        let b = Field::constant(g, 3.0);
        let f = Field::from_fn(g, |x| (5.0 * x[0]).sin());
        let c = commutator_apply(&b, &f, 2, &p).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn commutator_decays_for_smooth_multiplier() {
        let g = Grid::unit_1d(1024).unwrap();
        let p = DyadicPartition::new(&g).unwrap();
        let b = Field::from_fn(g, |x| x[0].cos());
        let mut scaled = vec![];
        for j in 1..p.j_max() {
            let f = Field::from_fn(g, |x| (2f64.powi(j) * x[0]).cos());
            let c = commutator_apply(&b, &f, j, &p).unwrap();
            scaled.push(c.sup_norm() * 2f64.powi(j));
        }
        let first = scaled[0].max(1e-300);
        for s in &scaled {
            assert!(*s <= 1.0 * first.max(1e-12) + 1e-12, "{scaled:?}");
        }
    }
}
