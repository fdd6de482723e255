//! Randomized subspace-iteration eigensolver and the seeded Gaussian
//! sampler behind it.

mod approx;
mod rng;

pub use approx::{approx_eig, ApproxParams, DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERS};
pub use rng::{gaussian_matrix, RandomStream};
