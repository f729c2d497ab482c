//! Shared helpers for unit and property tests.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Field;
use crate::tensor::DenseTensor;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix<S: Field>(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<S> {
    let mut a = Array2::zeros((rows, cols));
    // fill column-by-column so the draw order matches the storage convention
    for j in 0..cols {
        for i in 0..rows {
            a[[i, j]] = S::sample_standard(rng);
        }
    }
    a
}

pub fn random_tensor<S: Field>(shape: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor<S> {
    let len: usize = shape.iter().product();
    let data: Vec<S> = (0..len).map(|_| S::sample_standard(rng)).collect();
    DenseTensor::new(shape.to_vec(), data).unwrap()
}
