//! MSE-aware uniform quantization with grid search over clipping ranges.
//!
//! The clipping range `(r_min, r_max)` is searched on an
//! `n_split x n_split` grid spanning `[min, mean] x [mean, max]`; each
//! candidate clips, quantizes to `2^bits` levels, dequantizes, and the
//! lowest-MSE configuration wins.

use crate::error::{Error, Result};
use crate::footprint::MemoryFootprint;
use crate::matrix::DenseMatrix;

/// Uniform quantization code: indices on an arithmetic grid `a * q + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct UqCode {
    pub bits: u32,
    pub rows: usize,
    pub cols: usize,
    pub indices: Vec<u32>,
    /// Grid step.
    pub scale: f64,
    /// Grid origin (the optimized lower clipping bound).
    pub bias: f64,
}

impl UqCode {
    pub fn dequantize(&self) -> DenseMatrix {
        let values = self
            .indices
            .iter()
            .map(|&q| self.scale * q as f64 + self.bias)
            .collect();
        DenseMatrix::from_vec_unchecked(self.rows, self.cols, values)
    }

    pub fn footprint(&self, scalar_bits: u32) -> MemoryFootprint {
        let binary_bits = (self.rows * self.cols) as u64 * self.bits as u64;
        MemoryFootprint::new(binary_bits, 2, scalar_bits)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    debug_assert!(n >= 2);
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(move |i| if i == n - 1 { b } else { a + step * i as f64 })
}

/// Quantization error of one clipping candidate, without materializing the
/// matrices.
fn candidate_error(values: &[f64], r_min: f64, r_max: f64, levels_minus_1: f64) -> f64 {
    let range = r_max - r_min;
    let mut err = 0.0;
    if range <= 0.0 {
        // Degenerate cell: everything collapses to r_min.
        for &w in values {
            let d = w - r_min;
            err += d * d;
        }
        return err / values.len() as f64;
    }
    for &w in values {
        let clipped = w.clamp(r_min, r_max);
        let q = ((clipped - r_min) / range * levels_minus_1)
            .round()
            .clamp(0.0, levels_minus_1);
        let deq = q / levels_minus_1 * range + r_min;
        let d = w - deq;
        err += d * d;
    }
    err / values.len() as f64
}

/// Grid-search uniform quantization.
///
/// The search grid always contains the naive full-range `(min, max)`
/// configuration, so the result is never worse than plain min-max UQ. Ties
/// keep the first candidate in scan order (outer loop over `r_max` from the
/// mean up, inner loop over `r_min` from the min up).
pub fn uq_grid(w: &DenseMatrix, bits: u32, n_split: usize) -> Result<UqCode> {
    if bits == 0 || bits > 24 {
        return Err(Error::invalid(format!(
            "bit width must be in 1..=24, got {bits}"
        )));
    }
    if n_split < 2 {
        return Err(Error::invalid("n_split must be at least 2"));
    }
    let levels_minus_1 = ((1u64 << bits) - 1) as f64;
    let w_min = w.min();
    let w_max = w.max();
    let mu = w.mean();

    if w_max == w_min {
        // Constant matrix: exact bias-only code.
        return Ok(UqCode {
            bits,
            rows: w.rows(),
            cols: w.cols(),
            indices: vec![0; w.len()],
            scale: 0.0,
            bias: w_min,
        });
    }

    let mut best_err = f64::INFINITY;
    let mut best = (mu, w_max);
    for r_max in linspace(mu, w_max, n_split) {
        for r_min in linspace(w_min, mu, n_split) {
            let err = candidate_error(w.values(), r_min, r_max, levels_minus_1);
            if err < best_err {
                best_err = err;
                best = (r_min, r_max);
            }
        }
    }

    let (r_min, r_max) = best;
    let range = r_max - r_min;
    let (scale, indices) = if range <= 0.0 {
        (0.0, vec![0u32; w.len()])
    } else {
        let indices = w
            .values()
            .iter()
            .map(|&v| {
                ((v.clamp(r_min, r_max) - r_min) / range * levels_minus_1)
                    .round()
                    .clamp(0.0, levels_minus_1) as u32
            })
            .collect();
        (range / levels_minus_1, indices)
    };
    Ok(UqCode {
        bits,
        rows: w.rows(),
        cols: w.cols(),
        indices,
        scale,
        bias: r_min,
    })
}
