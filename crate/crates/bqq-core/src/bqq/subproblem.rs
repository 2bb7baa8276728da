//! The per-stack subproblem: fit `r Y Z + s Y 1_Z + t 1_Y Z + u 1` to a
//! residual matrix `R` in least squares over binary `Y, Z` and real scalars.
//!
//! With the scalars fixed, substituting `y^2 = y` for binary variables turns
//! the squared error into a multilinear PUBO objective: the raw squared
//! error plus correction terms that cancel on binary inputs. Evaluated at
//! relaxed values in `[0,1]` it equals the expectation of the squared error
//! under independent Bernoulli draws, which is exactly what the mean-field
//! solver needs. With the binaries fixed, the scalars have a closed-form
//! optimum from a 4x4 linear system (`sfo`).
//!
//! `solve_subproblem` interleaves the two: one AMFD iteration over all
//! `m*l + l*n` relaxed variables, then a scalar re-fit, for `n_step`
//! rounds, followed by binarization and one exact scalar fit.

use crate::amfd::{AmfdScratch, AnnealParams, MeanFieldState};
use crate::error::{Error, Result};
use crate::matrix::{BitMatrix, DenseMatrix};
use crate::pubo::Pubo;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BqqStack, ScalingFactors};

/// Relative eigenvalue cutoff when the 4x4 scalar system is rank-deficient.
const SFO_RANK_CUTOFF: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Internal slice-based engine
// ---------------------------------------------------------------------------

/// Derived quantities for one (y, z) configuration.
struct Parts {
    prod: Vec<f64>, // m x n: y z
    yrow: Vec<f64>, // m: row sums of y
    zcol: Vec<f64>, // n: column sums of z
    a: Vec<f64>,    // l: column sums of y
    a2: Vec<f64>,   // l: column sums of y^2
    c: Vec<f64>,    // l: row sums of z
    c2: Vec<f64>,   // l: row sums of z^2
}

impl Parts {
    fn new(m: usize, l: usize, n: usize) -> Self {
        Self {
            prod: vec![0.0; m * n],
            yrow: vec![0.0; m],
            zcol: vec![0.0; n],
            a: vec![0.0; l],
            a2: vec![0.0; l],
            c: vec![0.0; l],
            c2: vec![0.0; l],
        }
    }

    fn compute(&mut self, m: usize, l: usize, n: usize, y: &[f64], z: &[f64]) {
        self.prod.fill(0.0);
        for i in 0..m {
            let out = &mut self.prod[i * n..(i + 1) * n];
            for k in 0..l {
                let yv = y[i * l + k];
                if yv != 0.0 {
                    let zrow = &z[k * n..(k + 1) * n];
                    for (o, &zv) in out.iter_mut().zip(zrow) {
                        *o += yv * zv;
                    }
                }
            }
        }
        for i in 0..m {
            self.yrow[i] = y[i * l..(i + 1) * l].iter().sum();
        }
        self.zcol.fill(0.0);
        for k in 0..l {
            for (j, &zv) in z[k * n..(k + 1) * n].iter().enumerate() {
                self.zcol[j] += zv;
            }
        }
        self.a.fill(0.0);
        self.a2.fill(0.0);
        for i in 0..m {
            for k in 0..l {
                let yv = y[i * l + k];
                self.a[k] += yv;
                self.a2[k] += yv * yv;
            }
        }
        for k in 0..l {
            let mut c = 0.0;
            let mut c2 = 0.0;
            for &zv in &z[k * n..(k + 1) * n] {
                c += zv;
                c2 += zv * zv;
            }
            self.c[k] = c;
            self.c2[k] = c2;
        }
    }

    /// Correction coefficients (vanish when y and z are binary).
    fn corrections(&self, m: usize, n: usize) -> [f64; 5] {
        let mut c_rr = 0.0;
        let mut sum_y_lin = 0.0; // sum_k (a_k - a2_k)
        let mut sum_z_lin = 0.0; // sum_k (c_k - c2_k)
        let mut c_rs = 0.0;
        let mut c_rt = 0.0;
        for k in 0..self.a.len() {
            c_rr += self.a[k] * self.c[k] - self.a2[k] * self.c2[k];
            sum_y_lin += self.a[k] - self.a2[k];
            sum_z_lin += self.c[k] - self.c2[k];
            c_rs += (self.a[k] - self.a2[k]) * self.c[k];
            c_rt += self.a[k] * (self.c[k] - self.c2[k]);
        }
        let c_ss = n as f64 * sum_y_lin;
        let c_tt = m as f64 * sum_z_lin;
        [c_rr, c_ss, c_tt, c_rs, c_rt]
    }
}

/// Residual field `E = R - (r prod + s yrow + t zcol + u)` and its square sum.
fn residual_field(
    m: usize,
    n: usize,
    r_values: &[f64],
    parts: &Parts,
    f: &ScalingFactors,
    e: &mut [f64],
) -> f64 {
    let mut sum_sq = 0.0;
    for i in 0..m {
        let yr = f.s * parts.yrow[i];
        for j in 0..n {
            let idx = i * n + j;
            let approx = f.r * parts.prod[idx] + yr + f.t * parts.zcol[j] + f.u;
            let diff = r_values[idx] - approx;
            e[idx] = diff;
            sum_sq += diff * diff;
        }
    }
    sum_sq
}

fn l_pubo_from_parts(
    m: usize,
    n: usize,
    r_values: &[f64],
    parts: &Parts,
    f: &ScalingFactors,
    e: &mut [f64],
) -> f64 {
    let l_sub = residual_field(m, n, r_values, parts, f, e);
    let [c_rr, c_ss, c_tt, c_rs, c_rt] = parts.corrections(m, n);
    l_sub
        + f.r * f.r * c_rr
        + f.s * f.s * c_ss
        + f.t * f.t * c_tt
        + 2.0 * f.r * f.s * c_rs
        + 2.0 * f.r * f.t * c_rt
}

#[allow(clippy::too_many_arguments)]
fn gradient_from_parts(
    m: usize,
    l: usize,
    n: usize,
    y: &[f64],
    z: &[f64],
    parts: &Parts,
    f: &ScalingFactors,
    e: &[f64],
    gy: &mut [f64],
    gz: &mut [f64],
) {
    let nf = n as f64;
    let mf = m as f64;

    // erow / ecol: row and column sums of the residual field.
    let mut ecol = vec![0.0; n];
    for i in 0..m {
        for (j, &ev) in e[i * n..(i + 1) * n].iter().enumerate() {
            ecol[j] += ev;
        }
    }

    // gy[i,k] = -2 (r <E_i, z_k> + s erow_i) + r^2 (c_k - 2 y c2_k)
    //           + s^2 n (1 - 2y) + 2rs (1 - 2y) c_k + 2rt (c_k - c2_k)
    for i in 0..m {
        let erow_slice = &e[i * n..(i + 1) * n];
        let erow: f64 = erow_slice.iter().sum();
        for k in 0..l {
            let zrow = &z[k * n..(k + 1) * n];
            let mut dot = 0.0;
            for (ev, zv) in erow_slice.iter().zip(zrow) {
                dot += ev * zv;
            }
            let yv = y[i * l + k];
            let one_minus_2y = 1.0 - 2.0 * yv;
            gy[i * l + k] = -2.0 * (f.r * dot + f.s * erow)
                + f.r * f.r * (parts.c[k] - 2.0 * yv * parts.c2[k])
                + f.s * f.s * nf * one_minus_2y
                + 2.0 * f.r * f.s * one_minus_2y * parts.c[k]
                + 2.0 * f.r * f.t * (parts.c[k] - parts.c2[k]);
        }
    }

    // gz[k,j] = -2 (r <y_k, E_j> + t ecol_j) + r^2 (a_k - 2 z a2_k)
    //           + t^2 m (1 - 2z) + 2rs (a_k - a2_k) + 2rt a_k (1 - 2z)
    gz.fill(0.0);
    for i in 0..m {
        let erow_slice = &e[i * n..(i + 1) * n];
        for k in 0..l {
            let yv = y[i * l + k];
            if yv != 0.0 {
                let out = &mut gz[k * n..(k + 1) * n];
                for (o, &ev) in out.iter_mut().zip(erow_slice) {
                    *o += yv * ev;
                }
            }
        }
    }
    for k in 0..l {
        let ak = parts.a[k];
        let a2k = parts.a2[k];
        let lin_y = ak - a2k;
        for j in 0..n {
            let zv = z[k * n + j];
            let one_minus_2z = 1.0 - 2.0 * zv;
            let dot = gz[k * n + j];
            gz[k * n + j] = -2.0 * (f.r * dot + f.t * ecol[j])
                + f.r * f.r * (ak - 2.0 * zv * a2k)
                + f.t * f.t * mf * one_minus_2z
                + 2.0 * f.r * f.s * lin_y
                + 2.0 * f.r * f.t * ak * one_minus_2z;
        }
    }
}

/// Closed-form scalar fit: minimize the PUBO objective over `(r, s, t, u)`
/// with the (possibly relaxed) factors fixed. Solves the 4x4 system from
/// the Hessian and first-order coefficients; rank-deficient configurations
/// (e.g. `Y = 0`) fall back to the least-norm solution via an eigenvalue
/// cutoff pseudo-inverse.
fn sfo_from_parts(m: usize, n: usize, r_values: &[f64], parts: &Parts) -> ScalingFactors {
    let [c_rr, c_ss, c_tt, c_rs, c_rt] = parts.corrections(m, n);
    let mf = m as f64;
    let nf = n as f64;

    let sum_yrow: f64 = parts.yrow.iter().sum();
    let sum_zcol: f64 = parts.zcol.iter().sum();
    let sum_prod: f64 = parts.prod.iter().sum();
    let prod_sq: f64 = parts.prod.iter().map(|v| v * v).sum();
    let yrow_sq: f64 = parts.yrow.iter().map(|v| v * v).sum();
    let zcol_sq: f64 = parts.zcol.iter().map(|v| v * v).sum();

    let mut prod_dot_r = 0.0;
    let mut sum_r = 0.0;
    let mut rrow = vec![0.0; m];
    let mut rcol = vec![0.0; n];
    for i in 0..m {
        for j in 0..n {
            let rv = r_values[i * n + j];
            prod_dot_r += parts.prod[i * n + j] * rv;
            sum_r += rv;
            rrow[i] += rv;
            rcol[j] += rv;
        }
    }
    let yrow_dot_r: f64 = parts.yrow.iter().zip(&rrow).map(|(a, b)| a * b).sum();
    let zcol_dot_r: f64 = parts.zcol.iter().zip(&rcol).map(|(a, b)| a * b).sum();

    let mut prod_row = vec![0.0; m];
    let mut prod_col = vec![0.0; n];
    for (pr, row) in prod_row.iter_mut().zip(parts.prod.chunks_exact(n)) {
        for (pc, &pv) in prod_col.iter_mut().zip(row) {
            *pr += pv;
            *pc += pv;
        }
    }
    let prod_dot_yrow: f64 = parts.yrow.iter().zip(&prod_row).map(|(a, b)| a * b).sum();
    let prod_dot_zcol: f64 = parts.zcol.iter().zip(&prod_col).map(|(a, b)| a * b).sum();

    let g = [
        [
            prod_sq + c_rr,
            prod_dot_yrow + c_rs,
            prod_dot_zcol + c_rt,
            sum_prod,
        ],
        [
            prod_dot_yrow + c_rs,
            nf * yrow_sq + c_ss,
            sum_yrow * sum_zcol,
            nf * sum_yrow,
        ],
        [
            prod_dot_zcol + c_rt,
            sum_yrow * sum_zcol,
            mf * zcol_sq + c_tt,
            mf * sum_zcol,
        ],
        [sum_prod, nf * sum_yrow, mf * sum_zcol, mf * nf],
    ];
    let rhs = [prod_dot_r, yrow_dot_r, zcol_dot_r, sum_r];
    let theta = sym4_pinv_solve(&g, &rhs);
    ScalingFactors {
        r: theta[0],
        s: theta[1],
        t: theta[2],
        u: theta[3],
    }
}

/// Least-norm solution of the symmetric PSD system `g x = rhs` through a
/// Jacobi eigendecomposition with a relative eigenvalue cutoff.
#[allow(clippy::needless_range_loop)]
fn sym4_pinv_solve(g: &[[f64; 4]; 4], rhs: &[f64; 4]) -> [f64; 4] {
    let mut a = *g;
    let mut v = [[0.0f64; 4]; 4];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &x| acc.max(x.abs()))
        .max(1e-300);

    for _ in 0..64 {
        let mut off = 0.0f64;
        for p in 0..4 {
            for q in (p + 1)..4 {
                off = off.max(a[p][q].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..4 {
            for q in (p + 1)..4 {
                if a[p][q].abs() <= 1e-18 * scale {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..4 {
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for j in 0..4 {
                    let apj = a[p][j];
                    let aqj = a[q][j];
                    a[p][j] = c * apj - s * aqj;
                    a[q][j] = s * apj + c * aqj;
                }
                for row in v.iter_mut() {
                    let vip = row[p];
                    let viq = row[q];
                    row[p] = c * vip - s * viq;
                    row[q] = s * vip + c * viq;
                }
            }
        }
    }

    let eigs = [a[0][0], a[1][1], a[2][2], a[3][3]];
    let max_eig = eigs.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let cutoff = SFO_RANK_CUTOFF * max_eig.max(1e-300);
    let mut x = [0.0f64; 4];
    for k in 0..4 {
        if eigs[k].abs() <= cutoff {
            continue;
        }
        let mut proj = 0.0;
        for i in 0..4 {
            proj += v[i][k] * rhs[i];
        }
        let coef = proj / eigs[k];
        for i in 0..4 {
            x[i] += coef * v[i][k];
        }
    }
    x
}

// ---------------------------------------------------------------------------
// The subproblem as a PUBO problem
// ---------------------------------------------------------------------------

/// The subproblem objective with fixed scalars, exposed as a [`Pubo`]
/// problem over the `m*l + l*n` flattened binary variables (all of `Y`
/// row-major, then all of `Z` row-major).
///
/// `energy` evaluates the squared error directly on binary factors;
/// `mean_field_energy` evaluates the corrected PUBO polynomial, which agrees
/// with it on every binary vertex and equals the Bernoulli expectation of
/// the squared error at interior points.
pub struct SubproblemObjective<'a> {
    residual: &'a DenseMatrix,
    l: usize,
    scales: ScalingFactors,
}

impl<'a> SubproblemObjective<'a> {
    pub fn new(residual: &'a DenseMatrix, l: usize, scales: ScalingFactors) -> Result<Self> {
        if l == 0 {
            return Err(Error::invalid("intermediate dimension must be positive"));
        }
        Ok(Self {
            residual,
            l,
            scales,
        })
    }

    pub fn scales(&self) -> ScalingFactors {
        self.scales
    }

    pub fn set_scales(&mut self, scales: ScalingFactors) {
        self.scales = scales;
    }

    fn dims(&self) -> (usize, usize, usize) {
        (self.residual.rows(), self.l, self.residual.cols())
    }

    fn split<'x>(&self, x: &'x [f64]) -> (&'x [f64], &'x [f64]) {
        let (m, l, _) = self.dims();
        x.split_at(m * l)
    }
}

impl Pubo for SubproblemObjective<'_> {
    fn num_vars(&self) -> usize {
        let (m, l, n) = self.dims();
        m * l + l * n
    }

    fn energy(&self, s: &[bool]) -> f64 {
        // Direct squared error, no PUBO corrections: an independent route
        // used to validate vertex agreement.
        let (m, l, n) = self.dims();
        debug_assert_eq!(s.len(), m * l + l * n);
        let r_values = self.residual.values();
        let f = &self.scales;
        let (ybits, zbits) = s.split_at(m * l);
        let mut total = 0.0;
        let mut zcol = vec![0.0f64; n];
        for k in 0..l {
            for j in 0..n {
                if zbits[k * n + j] {
                    zcol[j] += 1.0;
                }
            }
        }
        for i in 0..m {
            let yrow = &ybits[i * l..(i + 1) * l];
            let row_count = yrow.iter().filter(|&&b| b).count() as f64;
            for j in 0..n {
                let mut yz = 0.0;
                for (k, &yb) in yrow.iter().enumerate() {
                    if yb && zbits[k * n + j] {
                        yz += 1.0;
                    }
                }
                let approx = f.r * yz + f.s * row_count + f.t * zcol[j] + f.u;
                let diff = r_values[i * n + j] - approx;
                total += diff * diff;
            }
        }
        total
    }

    fn mean_field_energy(&self, x: &[f64]) -> f64 {
        let (m, l, n) = self.dims();
        let (y, z) = self.split(x);
        let mut parts = Parts::new(m, l, n);
        parts.compute(m, l, n, y, z);
        let mut e = vec![0.0; m * n];
        l_pubo_from_parts(m, n, self.residual.values(), &parts, &self.scales, &mut e)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let (m, l, n) = self.dims();
        let (y, z) = self.split(x);
        let mut parts = Parts::new(m, l, n);
        parts.compute(m, l, n, y, z);
        let mut e = vec![0.0; m * n];
        residual_field(m, n, self.residual.values(), &parts, &self.scales, &mut e);
        let (gy, gz) = grad.split_at_mut(m * l);
        gradient_from_parts(m, l, n, y, z, &parts, &self.scales, &e, gy, gz);
    }
}

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

fn check_factor_shapes(
    residual: &DenseMatrix,
    yc: &DenseMatrix,
    zc: &DenseMatrix,
) -> Result<(usize, usize, usize)> {
    let (m, n) = residual.shape();
    if yc.rows() != m || zc.cols() != n || yc.cols() != zc.rows() {
        return Err(Error::ShapeMismatch {
            left_rows: yc.rows(),
            left_cols: yc.cols(),
            right_rows: zc.rows(),
            right_cols: zc.cols(),
        });
    }
    Ok((m, yc.cols(), n))
}

/// PUBO objective value for (possibly relaxed) factors and fixed scalars.
///
/// On binary inputs this equals the squared reconstruction error exactly;
/// the correction terms vanish because `y^2 = y`.
pub fn l_pubo(
    residual: &DenseMatrix,
    yc: &DenseMatrix,
    zc: &DenseMatrix,
    f: &ScalingFactors,
) -> Result<f64> {
    let (m, l, n) = check_factor_shapes(residual, yc, zc)?;
    let mut parts = Parts::new(m, l, n);
    parts.compute(m, l, n, yc.values(), zc.values());
    let mut e = vec![0.0; m * n];
    Ok(l_pubo_from_parts(
        m,
        n,
        residual.values(),
        &parts,
        f,
        &mut e,
    ))
}

/// Analytic gradient of [`l_pubo`] with respect to every entry of the two
/// relaxed factors.
pub fn l_pubo_grad(
    residual: &DenseMatrix,
    yc: &DenseMatrix,
    zc: &DenseMatrix,
    f: &ScalingFactors,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let (m, l, n) = check_factor_shapes(residual, yc, zc)?;
    let mut parts = Parts::new(m, l, n);
    parts.compute(m, l, n, yc.values(), zc.values());
    let mut e = vec![0.0; m * n];
    residual_field(m, n, residual.values(), &parts, f, &mut e);
    let mut gy = vec![0.0; m * l];
    let mut gz = vec![0.0; l * n];
    gradient_from_parts(
        m,
        l,
        n,
        yc.values(),
        zc.values(),
        &parts,
        f,
        &e,
        &mut gy,
        &mut gz,
    );
    Ok((
        DenseMatrix::from_vec_unchecked(m, l, gy),
        DenseMatrix::from_vec_unchecked(l, n, gz),
    ))
}

/// Scaling-factor optimization: the exact minimizer of [`l_pubo`] over
/// `(r, s, t, u)` for fixed factors.
pub fn sfo(yc: &DenseMatrix, zc: &DenseMatrix, residual: &DenseMatrix) -> Result<ScalingFactors> {
    let (m, l, n) = check_factor_shapes(residual, yc, zc)?;
    let mut parts = Parts::new(m, l, n);
    parts.compute(m, l, n, yc.values(), zc.values());
    Ok(sfo_from_parts(m, n, residual.values(), &parts))
}

/// Fit one stack to a residual matrix by annealed mean-field descent.
///
/// The residual is normalized by its own value range for the duration of
/// the optimization and the final scalars are rescaled back. A constant
/// residual short-circuits to an exact bias-only stack. The returned stack
/// is never worse than the bias-only fit, because the final exact scalar
/// fit admits it as a feasible point.
pub fn solve_subproblem(
    residual: &DenseMatrix,
    params: &AnnealParams,
    l: usize,
    seed: u64,
) -> Result<BqqStack> {
    params.validate()?;
    if l == 0 {
        return Err(Error::invalid("intermediate dimension must be positive"));
    }
    let (m, n) = residual.shape();
    let range = residual.max() - residual.min();
    if range == 0.0 {
        return Ok(BqqStack {
            y: BitMatrix::zeros(m, l)?,
            z: BitMatrix::zeros(l, n)?,
            r: 0.0,
            s: 0.0,
            t: 0.0,
            u: residual.get(0, 0),
        });
    }

    let normalized = residual.scale(1.0 / range);
    let num_vars = m * l + l * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Initial expectations: y entries row-major, then z entries row-major,
    // with the damping pre-step toward 0.5 applied by the state constructor.
    let mut state = MeanFieldState::uniform_random(num_vars, params, &mut rng);

    let initial_scales = {
        let (y, z) = state.x_cur().split_at(m * l);
        let mut parts = Parts::new(m, l, n);
        parts.compute(m, l, n, y, z);
        sfo_from_parts(m, n, normalized.values(), &parts)
    };
    let mut objective = SubproblemObjective::new(&normalized, l, initial_scales)?;

    let mut scratch = AmfdScratch::new();
    let mut parts = Parts::new(m, l, n);
    for _ in 0..params.n_step {
        state.advance(&objective, params, &mut scratch);
        let (y, z) = state.x_cur().split_at(m * l);
        parts.compute(m, l, n, y, z);
        objective.set_scales(sfo_from_parts(m, n, normalized.values(), &parts));
    }

    // Binarize to the higher-probability value and re-fit the scalars
    // exactly on the binary factors, undoing the range normalization.
    let bits = state.round();
    let (ybits, zbits) = bits.split_at(m * l);
    let y = BitMatrix::from_fn(m, l, |i, k| ybits[i * l + k])?;
    let z = BitMatrix::from_fn(l, n, |k, j| zbits[k * n + j])?;

    let ydense: Vec<f64> = ybits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let zdense: Vec<f64> = zbits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    parts.compute(m, l, n, &ydense, &zdense);
    let scales = sfo_from_parts(m, n, normalized.values(), &parts);

    Ok(BqqStack {
        y,
        z,
        r: range * scales.r,
        s: range * scales.s,
        t: range * scales.t,
        u: range * scales.u,
    })
}
