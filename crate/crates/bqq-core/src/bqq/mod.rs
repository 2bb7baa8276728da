//! Binary quadratic quantization (BQQ).
//!
//! A real matrix `W` (m x n) is approximated by a sum of `p` stacks
//!
//! ```text
//! W ~ sum_i (r_i Y_i Z_i + s_i Y_i 1_Z + t_i 1_Y Z_i) + u 1
//! ```
//!
//! where `Y_i in {0,1}^(m x l)` and `Z_i in {0,1}^(l x n)` are binary and
//! `r_i, s_i, t_i, u` are real scalars. The all-ones matrices are notation
//! only; the stored representation is the binary factors plus `3p + 1`
//! scalars. With the intermediate dimension `l = round(mn / (m + n))` one
//! stack costs exactly as many binary bits as one first-order bit plane, so
//! `p` acts as a pseudo bit width.
//!
//! Fitting is greedy over stacks: each stack solves a least-squares
//! subproblem on the current residual, alternating a closed-form solve for
//! the scalars with annealed mean-field descent on a PUBO relaxation of the
//! binary variables (see [`subproblem`]).

mod bound;
mod cost;
mod greedy;
mod subproblem;

pub use bound::{error_upper_bound, sign_svd_feasible_stack};
pub use cost::{inference_cost, CostReport, CostWeights, OpCounts};
pub use greedy::{bqq_quantize, bqq_quantize_standardized, bqq_quantize_with_dim};
pub use subproblem::{l_pubo, l_pubo_grad, sfo, solve_subproblem, SubproblemObjective};

use crate::error::{Error, Result};
use crate::footprint::{bqq_footprint, MemoryFootprint};
use crate::matrix::{destandardize, BitMatrix, DenseMatrix, StandardizationRecord};

/// The four scalar coefficients of one stack (or of a scaling-factor
/// optimization step).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScalingFactors {
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub u: f64,
}

/// One term of the decomposition: binary factors and their scalars.
///
/// The per-stack bias `u` is kept so residuals can be reproduced exactly;
/// only the aggregated `u_total` of [`BqqCode`] counts toward memory.
#[derive(Debug, Clone, PartialEq)]
pub struct BqqStack {
    pub y: BitMatrix,
    pub z: BitMatrix,
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub u: f64,
}

impl BqqStack {
    pub fn inner_dim(&self) -> usize {
        self.y.cols()
    }

    /// Dense evaluation `r Y Z + s Y 1_Z + t 1_Y Z + u 1`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let m = self.y.rows();
        let n = self.z.cols();
        let l = self.y.cols();
        debug_assert_eq!(l, self.z.rows());

        // Z rows as dense buffers once, then accumulate rows selected by Y.
        let z_dense = self.z.to_dense();
        let mut prod = vec![0.0f64; m * n];
        for i in 0..m {
            let out_row = &mut prod[i * n..(i + 1) * n];
            for k in 0..l {
                if self.y.get(i, k) {
                    for (o, &zv) in out_row.iter_mut().zip(z_dense.row(k)) {
                        *o += zv;
                    }
                }
            }
        }
        let y_row_counts: Vec<f64> = (0..m)
            .map(|i| (0..l).filter(|&k| self.y.get(i, k)).count() as f64)
            .collect();
        let z_col_counts: Vec<f64> = (0..n)
            .map(|j| (0..l).filter(|&k| self.z.get(k, j)).count() as f64)
            .collect();

        let mut values = prod;
        for i in 0..m {
            for j in 0..n {
                let yz = values[i * n + j];
                values[i * n + j] =
                    self.r * yz + self.s * y_row_counts[i] + self.t * z_col_counts[j] + self.u;
            }
        }
        DenseMatrix::from_vec_unchecked(m, n, values)
    }
}

/// A complete BQQ representation of one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BqqCode {
    pub stacks: Vec<BqqStack>,
    /// Aggregated bias, always the sum of the per-stack biases.
    pub u_total: f64,
    pub rows: usize,
    pub cols: usize,
    pub l: usize,
    /// Set when the code was fitted to a standardized matrix; dequantization
    /// then restores the original scale.
    pub standardization: Option<StandardizationRecord>,
}

impl BqqCode {
    pub fn validate(&self) -> Result<()> {
        if self.stacks.is_empty() {
            return Err(Error::invalid("a BQQ code needs at least one stack"));
        }
        for stack in &self.stacks {
            if stack.y.rows() != self.rows
                || stack.y.cols() != self.l
                || stack.z.rows() != self.l
                || stack.z.cols() != self.cols
            {
                return Err(Error::ShapeMismatch {
                    left_rows: stack.y.rows(),
                    left_cols: stack.y.cols(),
                    right_rows: stack.z.rows(),
                    right_cols: stack.z.cols(),
                });
            }
        }
        let sum_u: f64 = self.stacks.iter().map(|s| s.u).sum();
        if (sum_u - self.u_total).abs() > 1e-9 * (1.0 + self.u_total.abs()) {
            return Err(Error::invalid(format!(
                "u_total {} does not match the sum of per-stack biases {}",
                self.u_total, sum_u
            )));
        }
        Ok(())
    }

    pub fn num_stacks(&self) -> usize {
        self.stacks.len()
    }

    pub fn footprint(&self, scalar_bits: u32) -> MemoryFootprint {
        bqq_footprint(self.rows, self.cols, self.l, self.stacks.len(), scalar_bits)
    }

    /// Reconstruction using only the first `count` stacks plus their own
    /// biases, in the (possibly standardized) fitting domain. Used to check
    /// the greedy residual trajectory.
    pub fn partial_reconstruction(&self, count: usize) -> DenseMatrix {
        let mut acc = DenseMatrix::from_vec_unchecked(
            self.rows,
            self.cols,
            vec![0.0; self.rows * self.cols],
        );
        for stack in self.stacks.iter().take(count) {
            acc = acc.add(&stack.reconstruct()).expect("shapes agree");
        }
        acc
    }
}

/// Intermediate dimension `l = round(l_scale * mn / (m + n))`, at least 1.
pub fn intermediate_dim(m: usize, n: usize, l_scale: f64) -> usize {
    assert!(m >= 1 && n >= 1 && l_scale > 0.0);
    let l = (l_scale * (m as f64 * n as f64) / (m as f64 + n as f64)).round();
    (l as usize).max(1)
}

/// Evaluate a BQQ code back to a dense matrix.
///
/// Per-stack biases are represented by the aggregated `u_total`; if a
/// standardization record is attached the result is mapped back to the
/// original scale.
pub fn dequantize(code: &BqqCode) -> DenseMatrix {
    let mut acc =
        DenseMatrix::from_vec_unchecked(code.rows, code.cols, vec![0.0; code.rows * code.cols]);
    for stack in &code.stacks {
        let term = BqqStack {
            u: 0.0,
            ..stack.clone()
        }
        .reconstruct();
        acc = acc.add(&term).expect("shapes agree");
    }
    let values = acc.values().iter().map(|v| v + code.u_total).collect();
    let acc = DenseMatrix::from_vec_unchecked(code.rows, code.cols, values);
    match &code.standardization {
        Some(record) => destandardize(&acc, record),
        None => acc,
    }
}
