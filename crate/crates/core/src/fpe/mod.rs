//! Nonlinear fractional Fokker–Planck solver, its backward Kolmogorov dual
//! and the duality check linking them.

pub mod kbe;
pub mod kernel;
pub mod solver;

pub use kbe::{duality_gap, duality_gap_from, kbe_solve, DualityReport};
pub use kernel::{drift_field, KernelDescriptor, KernelKind, KernelSpec};
pub use solver::{
    fpe_solve, fpe_step, gaussian_density, DriftTrajectory, FpeSolver, FpeState, NegativityPolicy, SolveOptions,
    SolveStats, SolverConfig, Trajectory,
};
