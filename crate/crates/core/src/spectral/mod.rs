//! Periodic-grid Fourier analysis: dyadic blocks, Besov norms, the fractional
//! Laplacian and the statistics behind the Bernstein, maximum-principle,
//! convolution and commutator harnesses.

pub mod besov;
pub mod ops;
pub mod partition;
pub mod synth;

pub use besov::{besov_norm, lp_block, lp_blocks, shell_norms, BesovIndex};
pub use ops::{
    bernstein_ratio, commutator_apply, convolve, derivative, frac_laplacian, gradient, max_principle_stat,
};
pub use partition::{ChiProfile, DyadicPartition};
pub use synth::{random_band_limited, synth_besov_field};

use crate::error::Result;
use crate::grid::Grid;

/// Convenience alias for [`DyadicPartition::new`].
pub fn build_partition(grid: &Grid) -> Result<DyadicPartition> {
    DyadicPartition::new(grid)
}
