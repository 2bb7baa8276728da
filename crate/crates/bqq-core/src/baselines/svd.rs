//! SVD low-rank baseline, with optionally uniform-quantized factors.

use crate::error::{Error, Result};
use crate::footprint::MemoryFootprint;
use crate::linalg::jacobi_svd;
use crate::matrix::DenseMatrix;

use super::uq::{uq_grid, UqCode};

/// One factor of a low-rank code: stored real or uniform-quantized.
#[derive(Debug, Clone, PartialEq)]
pub enum SvdFactor {
    Real(DenseMatrix),
    Quantized(UqCode),
}

impl SvdFactor {
    fn to_dense(&self) -> DenseMatrix {
        match self {
            SvdFactor::Real(m) => m.clone(),
            SvdFactor::Quantized(code) => code.dequantize(),
        }
    }

    fn footprint(&self, scalar_bits: u32) -> MemoryFootprint {
        match self {
            SvdFactor::Real(m) => MemoryFootprint::new(0, m.len() as u64, scalar_bits),
            SvdFactor::Quantized(code) => code.footprint(scalar_bits),
        }
    }
}

/// Rank-`rank` factorization `left (m x rank)` times `right (rank x n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdCode {
    pub rank: usize,
    pub left: SvdFactor,
    pub right: SvdFactor,
}

impl SvdCode {
    pub fn rows(&self) -> usize {
        match &self.left {
            SvdFactor::Real(m) => m.rows(),
            SvdFactor::Quantized(code) => code.rows,
        }
    }

    pub fn cols(&self) -> usize {
        match &self.right {
            SvdFactor::Real(m) => m.cols(),
            SvdFactor::Quantized(code) => code.cols,
        }
    }

    pub fn dequantize(&self) -> DenseMatrix {
        self.left
            .to_dense()
            .matmul(&self.right.to_dense())
            .expect("factor shapes agree")
    }

    pub fn footprint(&self, scalar_bits: u32) -> MemoryFootprint {
        self.left
            .footprint(scalar_bits)
            .combine(&self.right.footprint(scalar_bits))
    }
}

fn check_rank(w: &DenseMatrix, rank: usize) -> Result<()> {
    let max = w.rows().min(w.cols());
    if rank == 0 || rank > max {
        return Err(Error::invalid(format!(
            "rank must be in 1..={max}, got {rank}"
        )));
    }
    Ok(())
}

/// Plain low-rank approximation; the left factor absorbs the singular values.
pub fn svd_lowrank(w: &DenseMatrix, rank: usize) -> Result<SvdCode> {
    check_rank(w, rank)?;
    let svd = jacobi_svd(w);
    let (left, right) = svd.truncated_factors(rank);
    Ok(SvdCode {
        rank,
        left: SvdFactor::Real(left),
        right: SvdFactor::Real(right),
    })
}

/// Low-rank approximation with each factor quantized independently by
/// grid-search UQ.
pub fn svd_uq(w: &DenseMatrix, rank: usize, bits: u32, n_split: usize) -> Result<SvdCode> {
    check_rank(w, rank)?;
    let svd = jacobi_svd(w);
    let (left, right) = svd.truncated_factors(rank);
    Ok(SvdCode {
        rank,
        left: SvdFactor::Quantized(uq_grid(&left, bits, n_split)?),
        right: SvdFactor::Quantized(uq_grid(&right, bits, n_split)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::mse;
    use crate::synth::gen_gaussian;

    #[test]
    fn full_rank_reconstructs_exactly() {
        let w = gen_gaussian(10, 8, 3);
        let code = svd_lowrank(&w, 8).unwrap();
        let err = mse(&w, &code.dequantize()).unwrap();
        assert!(err < 1e-20, "err = {err}");
    }

    #[test]
    fn rank_one_outer_product_is_exact() {
        let w = DenseMatrix::from_fn(6, 4, |i, j| (i as f64 + 1.0) * (j as f64 - 1.5)).unwrap();
        let code = svd_lowrank(&w, 1).unwrap();
        let err = mse(&w, &code.dequantize()).unwrap();
        assert!(err < 1e-20, "err = {err}");
    }

    #[test]
    fn residual_matches_gram_eigenvalue_tail() {
        // Independent oracle: the squared residual of the rank-k truncation
        // equals the sum of trailing eigenvalues of W^T W.
        let w = gen_gaussian(32, 32, 19);
        let rank = 8;
        let code = svd_lowrank(&w, rank).unwrap();
        let resid = w.sub(&code.dequantize()).unwrap().frob_sq();

        let gram = w.transpose().matmul(&w).unwrap();
        let gram_svd = jacobi_svd(&gram); // eigenvalues of a PSD matrix
        let tail: f64 = gram_svd.singular_values[rank..].iter().sum();
        assert!(
            (resid - tail).abs() <= 1e-8 * tail.max(1.0),
            "resid = {resid}, gram tail = {tail}"
        );
    }

    #[test]
    fn quantized_factors_still_approximate() {
        let w = gen_gaussian(24, 24, 5);
        let plain = svd_lowrank(&w, 6).unwrap();
        let quant = svd_uq(&w, 6, 8, 60).unwrap();
        let plain_err = mse(&w, &plain.dequantize()).unwrap();
        let quant_err = mse(&w, &quant.dequantize()).unwrap();
        assert!(quant_err >= plain_err);
        assert!(quant_err < 2.0 * plain_err + 1e-3, "8-bit factors should be close");
        // Quantized footprint is smaller than storing reals at 32 bits.
        assert!(quant.footprint(32).total_bits() < plain.footprint(32).total_bits());
    }

    #[test]
    fn rank_bounds_are_enforced() {
        let w = gen_gaussian(4, 7, 1);
        assert!(svd_lowrank(&w, 0).is_err());
        assert!(svd_lowrank(&w, 5).is_err());
        assert!(svd_lowrank(&w, 4).is_ok());
    }
}
