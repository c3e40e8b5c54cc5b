use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::DenseTensor;
use super::matrix::Matrix;
use crate::error::Result;

/// Dense tensor with entries uniform in [-1, 1), row-major draw order.
pub fn random_dense(shape: &[usize], seed: u64) -> Result<DenseTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseTensor::from_fn(shape.to_vec(), |_| rng.random_range(-1.0..1.0))
}

/// One `shape[m] x rank` factor per mode, entries uniform in [-1, 1).
pub fn random_factors(shape: &[usize], rank: usize, seed: u64) -> Vec<Matrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shape
        .iter()
        .map(|&rows| Matrix::from_fn(rows, rank, |_, _| rng.random_range(-1.0..1.0)))
        .collect()
}
