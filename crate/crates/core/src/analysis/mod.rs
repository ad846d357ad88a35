//! Scaling classification, regularity-rate experiments and power-law fits.

pub mod fit;
pub mod rate;
pub mod scaling;

pub use fit::{fit_loglog, LogLogFit};
pub use rate::{drift_regularity_check, rate_experiment, DriftRegularityReport, RateReport, RateWindow};
pub use scaling::{classify_scaling, parse_q, Regime, ScalingVerdict};
