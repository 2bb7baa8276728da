//! Greedy binary coding quantization with a `{-1,+1}` basis.
//!
//! Round `i` fits `a_i B_i` to the running residual: `B = sign(residual)`
//! and `a = mean |residual|`, which is the exact least-squares optimum for
//! a sign basis (the alternating refinement `B <- sign(R)` given `a > 0`,
//! `a <- <R, B> / mn` given `B` is already at this fixed point). The scale
//! of round 1 therefore always equals `mean |W|`.

use crate::error::{Error, Result};
use crate::footprint::MemoryFootprint;
use crate::matrix::{BitMatrix, DenseMatrix};

/// BCQ code: `p` sign matrices (bit 1 is +1) with one scale each.
#[derive(Debug, Clone, PartialEq)]
pub struct BcqCode {
    pub rows: usize,
    pub cols: usize,
    pub bases: Vec<BitMatrix>,
    pub scales: Vec<f64>,
}

impl BcqCode {
    pub fn num_rounds(&self) -> usize {
        self.bases.len()
    }

    pub fn dequantize(&self) -> DenseMatrix {
        let mut values = vec![0.0f64; self.rows * self.cols];
        for (basis, &a) in self.bases.iter().zip(&self.scales) {
            for i in 0..self.rows {
                for j in 0..self.cols {
                    let sign = if basis.get(i, j) { 1.0 } else { -1.0 };
                    values[i * self.cols + j] += a * sign;
                }
            }
        }
        DenseMatrix::from_vec_unchecked(self.rows, self.cols, values)
    }

    pub fn footprint(&self, scalar_bits: u32) -> MemoryFootprint {
        let binary_bits = (self.rows * self.cols * self.bases.len()) as u64;
        MemoryFootprint::new(binary_bits, self.scales.len() as u64, scalar_bits)
    }
}

pub fn bcq(w: &DenseMatrix, p: usize) -> Result<BcqCode> {
    if p == 0 {
        return Err(Error::invalid("the number of rounds must be at least 1"));
    }
    let (m, n) = w.shape();
    let mut residual: Vec<f64> = w.values().to_vec();
    let mut bases = Vec::with_capacity(p);
    let mut scales = Vec::with_capacity(p);
    for _ in 0..p {
        // sign(0) = +1 keeps the basis deterministic.
        let basis = BitMatrix::from_fn(m, n, |i, j| residual[i * n + j] >= 0.0)?;
        let a = residual.iter().map(|v| v.abs()).sum::<f64>() / residual.len() as f64;
        for (i, v) in residual.iter_mut().enumerate() {
            let sign = if basis.get(i / n, i % n) { 1.0 } else { -1.0 };
            *v -= a * sign;
        }
        bases.push(basis);
        scales.push(a);
    }
    Ok(BcqCode {
        rows: m,
        cols: n,
        bases,
        scales,
    })
}
