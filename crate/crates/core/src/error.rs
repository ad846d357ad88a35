use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid grid, solver or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument is outside the operation's domain.
    #[error("argument error: {0}")]
    Argument(String),
    /// Time step violates the advective CFL guard.
    #[error("step-size error: dt*speed*k_max = {courant:.4} exceeds 0.9 (advection speed {speed:.6e})")]
    StepSize { speed: f64, courant: f64 },
    /// Non-finite values appeared during time stepping.
    #[error("solver diverged at step {step} (t = {t})")]
    Divergence { step: usize, t: f64 },
    /// Input is too small to define the requested statistic.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
