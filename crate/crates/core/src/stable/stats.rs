//! Validation statistics for stable samples.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};

/// `(1/N) sum_k exp(i xi . X_k)` over samples flattened with `xi.len()` coordinates each.
pub fn empirical_charfn(samples: &[f64], xi: &[f64]) -> Result<Complex64> {
    let d = xi.len();
    if d == 0 || samples.is_empty() || !samples.len().is_multiple_of(d) {
        return arg("empirical characteristic function needs at least one sample of matching dimension");
    }
    let n = samples.len() / d;
    let mut re = 0.0;
    let (mut up, mut down) = (Vec::new(), Vec::new());
    for x in samples.chunks_exact(d) {
        let phase: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
        re += phase.cos();
        let s = phase.sin();
        if s >= 0.0 {
            up.push(s);
        } else {
            down.push(-s);
        }
    }
    // sorted one-signed sums cancel exactly for symmetric samples
    up.sort_by(f64::total_cmp);
    down.sort_by(f64::total_cmp);
    let im = up.iter().sum::<f64>() - down.iter().sum::<f64>();
    Ok(Complex64::new(re / n as f64, im / n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub index: f64,
    pub k: usize,
    /// False when the estimate exceeds [`HEAVY_TAIL_CUTOFF`].
    pub heavy_tailed: bool,
}

/// Tail indices above this are reported as "not heavy-tailed".
pub const HEAVY_TAIL_CUTOFF: f64 = 3.0;

/// Hill estimator of the tail exponent from the `k` largest magnitudes.
pub fn hill_tail_index(samples: &[f64], k: usize) -> Result<TailEstimate> {
    let n = samples.len();
    if k < 10 || k > n / 10 {
        return arg(format!("Hill estimator needs 10 <= k <= N/10 (k = {k}, N = {n})"));
    }
    let mut mags: Vec<f64> = samples.iter().map(|v| v.abs()).collect();
    // largest k+1 magnitudes at the front
    mags.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    let threshold = mags[k];
    if threshold <= 0.0 {
        return arg("Hill estimator threshold is zero");
    }
    let h = mags[..k].iter().map(|x| (x / threshold).ln()).sum::<f64>() / k as f64;
    let index = 1.0 / h;
    Ok(TailEstimate { index, k, heavy_tailed: index <= HEAVY_TAIL_CUTOFF })
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return arg("Kolmogorov–Smirnov test needs two non-empty samples");
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    Ok((d, kolmogorov_q(lambda)))
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable::rng::StreamKey;
    use crate::stable::sampler::{sample_many, StableParams};
    use rand::Rng;
    use rand_distr::Open01;

    #[test]
    fn charfn_at_origin_and_symmetrized() {
        let x = vec![0.3, -1.2, 5.0, 0.01];
        assert_eq!(empirical_charfn(&x, &[0.0]).unwrap(), Complex64::new(1.0, 0.0));
        let mut pooled = x.clone();
        pooled.extend(x.iter().map(|v| -v));
        let phi = empirical_charfn(&pooled, &[0.7]).unwrap();
        assert_eq!(phi.im, 0.0);
        assert!(empirical_charfn(&[], &[1.0]).is_err());
    }

    #[test]
    fn charfn_for_alpha_one_and_a_half() {
        let p = StableParams::new(1.5, 1).unwrap();
        let n = 100_000;
        let x = sample_many(&p, 1.0, StreamKey::new(8, 0, 0), n).unwrap();
        let phi = empirical_charfn(&x, &[1.0]).unwrap();
        let target = (-1.0f64).exp();
        let se = ((1.0 + (-(2f64.powf(1.5))).exp() - 2.0 * target * target) / (2.0 * n as f64)).sqrt();
        assert!((phi.re - target).abs() < 3.0 * se);
    }

    #[test]
    fn hill_on_exact_pareto() {
        let mut rng = StreamKey::new(4, 0, 0).rng();
        let x: Vec<f64> = (0..100_000).map(|_| rng.sample::<f64, _>(Open01).powf(-1.0 / 1.5)).collect();
        let est = hill_tail_index(&x, 1000).unwrap();
        assert!((est.index - 1.5).abs() < 0.1, "{est:?}");
        assert!(est.heavy_tailed);
    }

    #[test]
    fn hill_on_stable_and_gaussian() {
        let heavy = StableParams::new(0.8, 1).unwrap();
        let x = sample_many(&heavy, 1.0, StreamKey::new(12, 0, 0), 100_000).unwrap();
        let est = hill_tail_index(&x, 1000).unwrap();
        assert!((est.index - 0.8).abs() < 0.1, "{est:?}");
        let gauss = StableParams::new(2.0, 1).unwrap();
        let y = sample_many(&gauss, 1.0, StreamKey::new(13, 0, 0), 100_000).unwrap();
        let est = hill_tail_index(&y, 1000).unwrap();
        assert!(est.index > 3.0 && !est.heavy_tailed, "{est:?}");
    }

    #[test]
    fn hill_range_checked() {
        let x = vec![1.0; 1000];
        assert!(hill_tail_index(&x, 5).is_err());
        assert!(hill_tail_index(&x, 101).is_err());
    }

    #[test]
    fn ks_detects_shift_and_accepts_same_law() {
        let mut rng = StreamKey::new(1, 0, 0).rng();
        let a: Vec<f64> = (0..5000).map(|_| rng.sample::<f64, _>(Open01)).collect();
        let b: Vec<f64> = (0..5000).map(|_| rng.sample::<f64, _>(Open01)).collect();
        let c: Vec<f64> = b.iter().map(|v| v + 0.1).collect();
        assert!(ks_two_sample(&a, &b).unwrap().1 > 0.01);
        assert!(ks_two_sample(&a, &c).unwrap().1 < 1e-6);
    }
}
