//! Seeded synthetic data sources for the benchmark harness.
//!
//! All generators are deterministic given their seed; the same seed always
//! yields bit-identical output.

use crate::io::tsplib::TspInstance;
use crate::matrix::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// I.i.d. standard Gaussian matrix.
pub fn gen_gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..rows * cols)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    DenseMatrix::from_vec_unchecked(rows, cols, values)
}

/// Sum of `rank` outer products of standard Gaussian vectors plus
/// `noise_std` times an independent Gaussian matrix.
///
/// With `noise_std = 0` the result has numerical rank exactly `rank`.
pub fn gen_lowrank_noise(
    rows: usize,
    cols: usize,
    rank: usize,
    noise_std: f64,
    seed: u64,
) -> DenseMatrix {
    assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
    assert!(
        rank >= 1 && rank <= rows.min(cols),
        "rank must be in 1..=min(rows, cols)"
    );
    assert!(noise_std >= 0.0 && noise_std.is_finite());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0f64; rows * cols];
    for _ in 0..rank {
        let u: Vec<f64> = (0..rows).map(|_| StandardNormal.sample(&mut rng)).collect();
        let v: Vec<f64> = (0..cols).map(|_| StandardNormal.sample(&mut rng)).collect();
        for i in 0..rows {
            for j in 0..cols {
                values[i * cols + j] += u[i] * v[j];
            }
        }
    }
    if noise_std > 0.0 {
        for value in values.iter_mut() {
            let g: f64 = StandardNormal.sample(&mut rng);
            *value += noise_std * g;
        }
    }
    DenseMatrix::from_vec_unchecked(rows, cols, values)
}

/// Random city instance with coordinates uniform in `[0, 1000)`.
pub fn gen_random_cities(n: usize, seed: u64) -> TspInstance {
    assert!(n >= 2, "an instance needs at least two cities");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n)
        .map(|_| {
            (
                rng.random_range(0.0..1000.0),
                rng.random_range(0.0..1000.0),
            )
        })
        .collect();
    TspInstance::new(format!("random{n}"), coords).expect("generated instance is valid")
}
