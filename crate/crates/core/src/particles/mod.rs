//! Interacting particle systems, the frozen-drift SDE and pathwise probes.

pub mod density;
pub mod ensemble;
pub mod euler;
pub mod pathwise;

pub use density::{deposit, estimate_density, smooth};
pub use ensemble::Ensemble;
pub use euler::{interpolate, step_linear, step_mckean, DriftMode, EulerConfig, Interpolation, McKeanStepper};
pub use pathwise::{
    drift_lipschitz, gronwall_envelope, pathwise_gap, pathwise_gap_on, self_convergence_ladder, solve_linear,
    strong_error_order, ConvergenceLadder, OrderReport,
};
