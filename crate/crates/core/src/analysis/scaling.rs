//! Scaling regime of a drift in `L^q_t C^beta_x` under `x -> lambda x`, `t -> lambda^alpha t`.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{arg, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

pub const SIGN_NOTE: &str = "subcritical means exponent > 0, i.e. the rescaled drift norm vanishes as lambda -> 0; \
the inequality form alpha/q + beta < alpha - 1 found alongside that statement has the opposite orientation in beta \
and is not used";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingVerdict {
    pub alpha: f64,
    pub beta: f64,
    #[serde(serialize_with = "ser_q")]
    pub q: f64,
    /// `alpha - 1 - alpha/q + beta`.
    pub exponent: f64,
    pub regime: Regime,
    /// Whether the sign was decided in exact rational arithmetic.
    pub exact: bool,
    pub note: &'static str,
}

fn ser_q<S: Serializer>(q: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if q.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*q)
    }
}

type Q = Ratio<i128>;

const MAX_DENOM: i128 = 1 << 32;

/// The first continued-fraction convergent `p/q` of `x` whose correctly rounded quotient is `x`.
fn as_rational(x: f64) -> Option<Q> {
    if !x.is_finite() || x.abs() > 1e9 {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut r = x;
    loop {
        let a = r.floor();
        let (p2, q2) = (a as i128 * p1 + p0, a as i128 * q1 + q0);
        if q2 > MAX_DENOM {
            return None;
        }
        if p2 as f64 / q2 as f64 == x {
            return Some(Q::new(p2, q2));
        }
        let frac = r - a;
        if frac == 0.0 {
            return None;
        }
        r = 1.0 / frac;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
}

/// Parse a time-integrability exponent; accepts `inf`.
pub fn parse_q(s: &str) -> Result<f64> {
    let q = match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        t => t.parse::<f64>().map_err(|_| crate::Error::Argument(format!("cannot parse q = {s:?}")))?,
    };
    if !(q >= 1.0) {
        return arg(format!("q must lie in [1, inf], got {s}"));
    }
    Ok(q)
}

pub fn classify_scaling(alpha: f64, beta: f64, q: f64) -> Result<ScalingVerdict> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return arg(format!("alpha must lie in (0, 2], got {alpha}"));
    }
    if !(q >= 1.0) || !beta.is_finite() {
        return arg("q must lie in [1, inf] and beta must be finite");
    }
    let alpha_over_q = if q.is_infinite() { 0.0 } else { alpha / q };
    let exponent = alpha - 1.0 - alpha_over_q + beta;
    let exact_sign = (|| {
        let a = as_rational(alpha)?;
        let b = as_rational(beta)?;
        let aq = if q.is_infinite() { Q::from_integer(0) } else { a / as_rational(q)? };
        let e = a - Q::from_integer(1) - aq + b;
        Some(if e.is_zero() { 0 } else if e.is_positive() { 1 } else { -1 })
    })();
    let (sign, exact) = match exact_sign {
        Some(s) => (s, true),
        None => (if exponent > 0.0 { 1 } else if exponent < 0.0 { -1 } else { 0 }, false),
    };
    let regime = match sign {
        1 => Regime::Subcritical,
        0 => Regime::Critical,
        _ => Regime::Supercritical,
    };
    let exponent = if sign == 0 { 0.0 } else { exponent };
    Ok(ScalingVerdict { alpha, beta, q, exponent, regime, exact, note: SIGN_NOTE })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn anchor_cases() {
        let v = classify_scaling(1.5, 0.2, f64::INFINITY).unwrap();
        assert_eq!(v.regime, Regime::Subcritical);
        assert!((v.exponent - 0.7).abs() < 1e-15);
        let v = classify_scaling(2.0, -1.0, f64::INFINITY).unwrap();
        assert_eq!((v.regime, v.exponent, v.exact), (Regime::Critical, 0.0, true));
        for alpha in [0.5, 1.0, 1.5, 2.0] {
            let eps = 0.3;
            let gamma = 1.0 - alpha / 2.0 + eps / 2.0;
            let v = classify_scaling(alpha, gamma, 2.0).unwrap();
            assert_eq!(v.regime, Regime::Subcritical);
            assert!((v.exponent - eps / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_cancellation_in_floats() {
        // 0.1 + 0.2 style rounding must not break criticality
        let v = classify_scaling(1.3, -0.3 + 0.0, f64::INFINITY).unwrap();
        assert_eq!(v.regime, Regime::Critical);
        let v = classify_scaling(1.5, 0.0, 3.0).unwrap();
        assert_eq!(v.regime, Regime::Critical);
    }

    #[test]
    fn q_parsing() {
        assert_eq!(parse_q("inf").unwrap(), f64::INFINITY);
        assert_eq!(parse_q("2").unwrap(), 2.0);
        assert!(parse_q("0.5").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn verdict_json() {
        let v = classify_scaling(1.5, 0.2, f64::INFINITY).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert!(s.contains("\"q\":\"inf\"") && s.contains("\"regime\":\"Subcritical\""));
    }

    proptest! {
        #[test]
        fn verdict_matches_exponent_sign(alpha in 0.01f64..=2.0, beta in -3.0f64..3.0, q in 1.0f64..50.0) {
            let v = classify_scaling(alpha, beta, q).unwrap();
            let e = alpha - 1.0 - alpha / q + beta;
            if e.abs() > 1e-12 {
                prop_assert_eq!(v.regime, if e > 0.0 { Regime::Subcritical } else { Regime::Supercritical });
            }
        }
    }
}
