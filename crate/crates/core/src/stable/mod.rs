//! Rotationally invariant alpha-stable noise: counter-keyed increments,
//! paths, refinement and validation statistics.

pub mod path;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use path::{coarsen, path, refine_path, NoisePath};
pub use rng::StreamKey;
pub use sampler::{sample_increment, sample_increment_into, sample_many, StableParams};
pub use stats::{empirical_charfn, hill_tail_index, ks_two_sample, TailEstimate};
