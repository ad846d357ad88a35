//! Numerical laboratory for McKean–Vlasov dynamics driven by rotationally
//! invariant alpha-stable noise.
//!
//! * [`spectral`]: Littlewood–Paley blocks, Besov norms and Fourier multipliers on the torus.
//! * [`stable`]: counter-based sampling of alpha-stable increments and paths.
//! * [`fpe`]: pseudo-spectral nonlinear fractional Fokker–Planck and backward Kolmogorov solvers.
//! * [`particles`]: interacting particle systems and pathwise probes.
//! * [`analysis`]: scaling classification, regularity-rate experiments and fits.
//! * [`suite`]: the acceptance checks shared by the test target and the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod fft;
pub mod fpe;
pub mod grid;
pub mod io;
pub mod particles;
pub mod spectral;
pub mod stable;
pub mod suite;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
