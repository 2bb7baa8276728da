//! Shared fixtures for the benchmark targets.

use bqq_core::matrix::{standardize, DenseMatrix};
use bqq_core::synth::{gen_gaussian, gen_lowrank_noise};

/// Standardized Gaussian benchmark matrix.
pub fn gaussian_fixture(size: usize) -> DenseMatrix {
    standardize(&gen_gaussian(size, size, 42)).0
}

/// Standardized rank-4 + 1% noise benchmark matrix.
pub fn lowrank_fixture(size: usize) -> DenseMatrix {
    standardize(&gen_lowrank_noise(size, size, 4, 0.02, 42)).0
}
