//! Exact-in-law sampling of rotationally invariant alpha-stable increments.
//!
//! The target law of `L_dt` has characteristic function `exp(-dt |xi|^alpha)`.
//! One-dimensional draws use the Chambers–Mallows–Stuck transform; in higher
//! dimension a positive `(alpha/2)`-stable subordinator `S` (Kanter's
//! representation, Laplace transform `exp(-dt lambda^{alpha/2})`) scales a
//! Gaussian with covariance `2 S I`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::stable::rng::StreamKey;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    pub dim: usize,
}

impl StableParams {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return arg(format!("stability index must lie in (0, 2], got {alpha}"));
        }
        if dim == 0 {
            return arg("dimension must be at least 1");
        }
        Ok(Self { alpha, dim })
    }

    /// Target characteristic function `exp(-t |xi|^alpha)`.
    pub fn charfn(&self, t: f64, xi: &[f64]) -> f64 {
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        (-t * r.powf(self.alpha)).exp()
    }
}

/// Symmetric standard stable variate, characteristic function `exp(-|xi|^alpha)`, `alpha < 2`.
pub fn cms_standard<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let v = PI * (u - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w = -rng.sample::<f64, _>(Open01).ln();
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// Positive stable variate with Laplace transform `exp(-lambda^a)`, `a in (0, 1)`.
pub fn positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let u = PI * rng.sample::<f64, _>(Open01);
    let w = -rng.sample::<f64, _>(Open01).ln();
    let kanter = (a * u).sin().powf(a / (1.0 - a)) * ((1.0 - a) * u).sin() / u.sin().powf(1.0 / (1.0 - a));
    (kanter / w).powf((1.0 - a) / a)
}

/// Write one increment `L_dt` into `out` (length `dim`).
pub fn sample_increment_into(params: &StableParams, dt: f64, key: StreamKey, out: &mut [f64]) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return arg(format!("time step must be positive, got {dt}"));
    }
    if out.len() != params.dim {
        return arg(format!("output buffer has length {}, expected {}", out.len(), params.dim));
    }
    let mut rng = key.rng();
    let alpha = params.alpha;
    if alpha == 2.0 {
        let s = (2.0 * dt).sqrt();
        for o in out.iter_mut() {
            *o = s * rng.sample::<f64, _>(StandardNormal);
        }
    } else if params.dim == 1 {
        out[0] = dt.powf(1.0 / alpha) * cms_standard(alpha, &mut rng);
    } else {
        let a = 0.5 * alpha;
        let sub = dt.powf(1.0 / a) * positive_stable(a, &mut rng);
        let s = (2.0 * sub).sqrt();
        for o in out.iter_mut() {
            *o = s * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(())
}

pub fn sample_increment(params: &StableParams, dt: f64, key: StreamKey) -> Result<Vec<f64>> {
    let mut out = vec![0.0; params.dim];
    sample_increment_into(params, dt, key, &mut out)?;
    Ok(out)
}

/// `count` increments on lanes `0..count` at one step, flattened.
pub fn sample_many(params: &StableParams, dt: f64, base: StreamKey, count: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; count * params.dim];
    for (lane, chunk) in out.chunks_exact_mut(params.dim).enumerate() {
        sample_increment_into(params, dt, base.with_lane(lane as u64), chunk)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable::stats::empirical_charfn;

    fn draws(params: &StableParams, dt: f64, n: usize, seed: u64) -> Vec<f64> {
        sample_many(params, dt, StreamKey::new(seed, 0, 0), n).unwrap()
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = StableParams::new(1.5, 1).unwrap();
        assert!(sample_increment(&p, 0.0, StreamKey::new(1, 0, 0)).is_err());
        assert!(sample_increment(&p, -1.0, StreamKey::new(1, 0, 0)).is_err());
        assert!(StableParams::new(2.1, 1).is_err());
        assert!(StableParams::new(0.0, 1).is_err());
    }

    #[test]
    fn gaussian_case_variance() {
        let p = StableParams::new(2.0, 1).unwrap();
        let x = draws(&p, 1.0, 100_000, 5);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
        assert!((var - 2.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn cauchy_characteristic_function() {
        let p = StableParams::new(1.0, 1).unwrap();
        let n = 100_000;
        let x = draws(&p, 1.0, n, 9);
        for xi in [0.5, 1.0, 2.0] {
            let phi = empirical_charfn(&x, &[xi]).unwrap();
            let target = (-xi).exp();
            // standard error of the real part of a bounded statistic
            let se = ((1.0 + (-2.0 * xi).exp() - 2.0 * target * target) / (2.0 * n as f64)).sqrt();
            assert!((phi.re - target).abs() < 3.0 * se, "xi = {xi}: {} vs {target}", phi.re);
        }
    }

    #[test]
    fn subordinator_laplace_transform() {
        let mut rng = StreamKey::new(3, 0, 0).rng();
        let a = 0.6;
        let n = 100_000;
        let mut acc = [0.0; 3];
        for _ in 0..n {
            let s = positive_stable(a, &mut rng);
            for (k, lam) in [0.5f64, 1.0, 2.0].iter().enumerate() {
                acc[k] += (-lam * s).exp();
            }
        }
        for (k, lam) in [0.5f64, 1.0, 2.0].iter().enumerate() {
            let emp = acc[k] / n as f64;
            assert!((emp - (-lam.powf(a)).exp()).abs() < 0.005, "lambda = {lam}: {emp}");
        }
    }

    #[test]
    fn median_scales_like_dt_power() {
        for alpha in [0.7, 1.5] {
            let p = StableParams::new(alpha, 1).unwrap();
            let med = |dt: f64, seed: u64| {
                let mut x: Vec<f64> = draws(&p, dt, 100_000, seed).into_iter().map(f64::abs).collect();
                x.sort_by(|a, b| a.partial_cmp(b).unwrap());
                x[x.len() / 2]
            };
            let ratio = med(0.05, 21) / med(0.1, 22);
            let expect = 2f64.powf(-1.0 / alpha);
            assert!((ratio / expect - 1.0).abs() < 0.05, "alpha = {alpha}: {ratio} vs {expect}");
        }
    }

    #[test]
    fn determinism() {
        let p = StableParams::new(1.3, 2).unwrap();
        let k = StreamKey::new(77, 5, 12);
        assert_eq!(sample_increment(&p, 0.1, k).unwrap(), sample_increment(&p, 0.1, k).unwrap());
    }
}
