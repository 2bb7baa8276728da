//! One-sided Jacobi singular value decomposition.
//!
//! Accurate at the matrix sizes this crate works with, with no external
//! linear-algebra dependency. Columns are rotated pairwise until every pair
//! is orthogonal to within `JACOBI_TOL` of its scale.

use crate::matrix::DenseMatrix;

/// Relative off-diagonal tolerance for convergence.
pub const JACOBI_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 60;

/// Thin SVD `a = u * diag(singular_values) * vt` with `k = min(rows, cols)`
/// columns in `u` and rows in `vt`, singular values sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub vt: DenseMatrix,
}

impl Svd {
    /// Rank-`rank` factors: `(u_r * sigma_r, vt_r)` of shapes
    /// `(rows x rank)` and `(rank x cols)`.
    pub fn truncated_factors(&self, rank: usize) -> (DenseMatrix, DenseMatrix) {
        let m = self.u.rows();
        let n = self.vt.cols();
        assert!(rank >= 1 && rank <= self.singular_values.len());
        let mut left = vec![0.0; m * rank];
        for i in 0..m {
            for j in 0..rank {
                left[i * rank + j] = self.u.get(i, j) * self.singular_values[j];
            }
        }
        let mut right = vec![0.0; rank * n];
        for i in 0..rank {
            right[i * n..(i + 1) * n].copy_from_slice(self.vt.row(i));
        }
        (
            DenseMatrix::from_vec_unchecked(m, rank, left),
            DenseMatrix::from_vec_unchecked(rank, n, right),
        )
    }

    /// Rank-`rank` reconstruction.
    pub fn reconstruct(&self, rank: usize) -> DenseMatrix {
        let (left, right) = self.truncated_factors(rank);
        left.matmul(&right).expect("factor shapes agree")
    }

    /// `sqrt(sum_{j > rank} sigma_j^2)`, the Frobenius error of the best
    /// rank-`rank` approximation.
    pub fn tail_energy(&self, rank: usize) -> f64 {
        self.singular_values[rank.min(self.singular_values.len())..]
            .iter()
            .map(|s| s * s)
            .sum::<f64>()
            .sqrt()
    }
}

/// Compute the SVD by one-sided Jacobi iteration on columns.
pub fn jacobi_svd(a: &DenseMatrix) -> Svd {
    if a.rows() >= a.cols() {
        jacobi_svd_tall(a)
    } else {
        // a = (a^T)^T: swap the roles of u and v.
        let t = jacobi_svd_tall(&a.transpose());
        Svd {
            u: t.vt.transpose(),
            singular_values: t.singular_values,
            vt: t.u.transpose(),
        }
    }
}

fn jacobi_svd_tall(a: &DenseMatrix) -> Svd {
    let m = a.rows();
    let n = a.cols();
    debug_assert!(m >= n);

    // Column-major working copies of A and V.
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| a.get(i, j)).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = column_moments(&cols[p], &cols[q]);
                if gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let mut u = vec![0.0; m * n];
    let mut vt = vec![0.0; n * n];
    let mut singular_values = Vec::with_capacity(n);
    for (out_j, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        singular_values.push(sigma);
        if sigma > 0.0 {
            for i in 0..m {
                u[i * n + out_j] = cols[src][i] / sigma;
            }
        }
        for i in 0..n {
            vt[out_j * n + i] = v[src][i];
        }
    }

    Svd {
        u: DenseMatrix::from_vec_unchecked(m, n, u),
        singular_values,
        vt: DenseMatrix::from_vec_unchecked(n, n, vt),
    }
}

fn column_moments(p: &[f64], q: &[f64]) -> (f64, f64, f64) {
    let mut alpha = 0.0;
    let mut beta = 0.0;
    let mut gamma = 0.0;
    for (a, b) in p.iter().zip(q) {
        alpha += a * a;
        beta += b * b;
        gamma += a * b;
    }
    (alpha, beta, gamma)
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    debug_assert!(p < q);
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let x = *a;
        let y = *b;
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}
