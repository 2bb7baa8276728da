//! Upper bound on the one-stack approximation error.
//!
//! Chain: the best stack is at least as good as the symmetric special case
//! `alpha (Y - 0.5) (Z - 0.5)`, whose error splits by the triangle
//! inequality into the rank-`l` SVD truncation tail plus the error of
//! projecting the rank-`l` reconstruction onto the single direction
//! `sgn(U S) sgn(V^T)` with the optimal scalar.

use crate::error::{Error, Result};
use crate::linalg::jacobi_svd;
use crate::matrix::{BitMatrix, DenseMatrix};

use super::subproblem::sfo;
use super::BqqStack;

fn sign_matrix(m: &DenseMatrix) -> DenseMatrix {
    // sgn(0) = +1 keeps the map deterministic.
    DenseMatrix::from_vec_unchecked(
        m.rows(),
        m.cols(),
        m.values()
            .iter()
            .map(|&v| if v >= 0.0 { 1.0 } else { -1.0 })
            .collect(),
    )
}

fn check_l(w: &DenseMatrix, l: usize) -> Result<()> {
    let k = w.rows().min(w.cols());
    if l == 0 || l >= k {
        return Err(Error::invalid(format!(
            "the bound needs 1 <= l < min(m, n) = {k}, got l = {l}"
        )));
    }
    Ok(())
}

/// Upper bound on `sqrt(L_sub)` for a single stack with inner dimension `l`.
pub fn error_upper_bound(w: &DenseMatrix, l: usize) -> Result<f64> {
    check_l(w, l)?;
    let svd = jacobi_svd(w);
    let tail = svd.tail_energy(l);

    let (left, right) = svd.truncated_factors(l); // U Sigma (m x l), V^T (l x n)
    let w_svd = left.matmul(&right)?;
    let direction = sign_matrix(&left).matmul(&sign_matrix(&right))?;
    let denom = direction.frob_sq();
    let coef = if denom == 0.0 {
        0.0
    } else {
        let inner: f64 = w_svd
            .values()
            .iter()
            .zip(direction.values())
            .map(|(a, b)| a * b)
            .sum();
        inner / denom
    };
    let residual = w_svd.sub(&direction.scale(coef))?.frob_sq().sqrt();
    Ok(tail + residual)
}

/// The feasible stack the bound argument is built from: binary factors from
/// the signs of the rank-`l` SVD factors, scalars fitted exactly.
///
/// Its error is a witness that the bound is attainable-from-above:
/// `sqrt(L_sub(stack)) <= error_upper_bound(w, l)`.
pub fn sign_svd_feasible_stack(w: &DenseMatrix, l: usize) -> Result<BqqStack> {
    check_l(w, l)?;
    let svd = jacobi_svd(w);
    let (left, right) = svd.truncated_factors(l);
    // step(sgn(x)): nonnegative entries map to 1.
    let y_dense = DenseMatrix::from_fn(left.rows(), left.cols(), |i, j| {
        if left.get(i, j) >= 0.0 {
            1.0
        } else {
            0.0
        }
    })?;
    let z_dense = DenseMatrix::from_fn(right.rows(), right.cols(), |i, j| {
        if right.get(i, j) >= 0.0 {
            1.0
        } else {
            0.0
        }
    })?;
    let scales = sfo(&y_dense, &z_dense, w)?;
    Ok(BqqStack {
        y: BitMatrix::from_dense(&y_dense)?,
        z: BitMatrix::from_dense(&z_dense)?,
        r: scales.r,
        s: scales.s,
        t: scales.t,
        u: scales.u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_gaussian, gen_lowrank_noise};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn positive_rank_one_matrix_reduces_to_constant_projection() {
        // W = sigma u v^T with u, v > 0 and l = 1: the tail vanishes and the
        // sign direction is the all-ones matrix, so the bound equals the
        // distance from W to its best constant fit.
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let u: Vec<f64> = (0..6).map(|_| rng.random_range(0.1..2.0)).collect();
        let v: Vec<f64> = (0..5).map(|_| rng.random_range(0.1..2.0)).collect();
        let w = DenseMatrix::from_fn(6, 5, |i, j| u[i] * v[j]).unwrap();
        let bound = error_upper_bound(&w, 1).unwrap();
        let mean = w.mean();
        let const_resid = w
            .values()
            .iter()
            .map(|x| (x - mean) * (x - mean))
            .sum::<f64>()
            .sqrt();
        assert!(
            (bound - const_resid).abs() < 1e-8 * const_resid.max(1.0),
            "bound = {bound}, constant residual = {const_resid}"
        );
    }

    #[test]
    fn exact_rank_kills_the_tail_term() {
        let w = gen_lowrank_noise(16, 16, 3, 0.0, 21);
        let bound = error_upper_bound(&w, 3).unwrap();
        // Tail is ~0; the bound is the pure projection residual, >= 0.
        assert!(bound >= 0.0);
        let svd = jacobi_svd(&w);
        assert!(svd.tail_energy(3) < 1e-8 * svd.singular_values[0]);
    }

    #[test]
    fn bound_dominates_the_feasible_point() {
        for seed in 0..8 {
            let w = gen_gaussian(32, 32, 300 + seed);
            let bound = error_upper_bound(&w, 16).unwrap();
            let stack = sign_svd_feasible_stack(&w, 16).unwrap();
            let achieved = w.sub(&stack.reconstruct()).unwrap().frob_sq().sqrt();
            assert!(
                achieved <= bound + 1e-9,
                "seed {seed}: achieved {achieved} > bound {bound}"
            );
        }
    }

    #[test]
    fn rejects_out_of_range_l() {
        let w = gen_gaussian(8, 6, 1);
        assert!(error_upper_bound(&w, 0).is_err());
        assert!(error_upper_bound(&w, 6).is_err());
        assert!(error_upper_bound(&w, 5).is_ok());
    }
}
