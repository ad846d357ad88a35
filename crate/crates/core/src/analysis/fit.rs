//! Least-squares power-law fits.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{arg, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% confidence interval for the slope.
    pub slope_band: f64,
    pub points: usize,
}

/// OLS fit of `ln y = intercept + slope ln x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() {
        return arg("fit inputs differ in length");
    }
    let n = xs.len();
    if n < 4 {
        return arg(format!("a log-log fit needs at least 4 points, got {n}"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return arg("log-log fit needs positive finite inputs");
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return arg("log-log fit needs at least two distinct abscissae");
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let dof = (n - 2) as f64;
    let se = (rss / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).expect("dof >= 2").inverse_cdf(0.975);
    Ok(LogLogFit { slope, intercept, slope_band: t * se, points: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_power_law() {
        let xs: Vec<f64> = (1..=10).map(|k| 0.1 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-0.75)).collect();
        let f = fit_loglog(&xs, &ys).unwrap();
        assert!((f.slope + 0.75).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.slope_band < 1e-10);
    }

    #[test]
    fn constant_has_zero_slope() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let f = fit_loglog(&xs, &[2.5; 5]).unwrap();
        assert!(f.slope.abs() < 1e-14);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..20).map(|k| 10f64.powf(-2.0 + 0.1 * k as f64)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powf(-0.75) * (1.0 + 0.01 * rng.random_range(-1.0..1.0))).collect();
        let f = fit_loglog(&xs, &ys).unwrap();
        assert!((f.slope + 0.75).abs() < 0.02);
        assert!((f.slope + 0.75).abs() < f.slope_band.max(1e-3) * 3.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_loglog(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_loglog(&[1.0, 2.0, 3.0, 4.0], &[1.0, 0.0, 3.0, 4.0]).is_err());
    }
}
