//! Polynomial unconstrained binary optimization (PUBO).
//!
//! A problem exposes three views: the energy `L(s)` on binary assignments,
//! its multilinear extension `L(x)` on expectations `x in [0,1]^N` (which
//! equals the expectation of `L` under independent Bernoulli marginals), and
//! the gradient of that extension. The mean-field solver in [`crate::amfd`]
//! only touches the extension and its gradient, so large implicit problems
//! (like the BQQ subproblem) can implement [`Pubo`] without materializing
//! coefficient lists.

use crate::error::{Error, Result};
use rand::Rng;

/// Exhaustive enumeration is capped at this many variables.
pub const MAX_ENUM_VARS: usize = 24;

/// A PUBO problem: binary energy, multilinear extension, and its gradient.
///
/// Implementations must keep the three views consistent: the extension has
/// to agree with `energy` on every binary vertex, and `gradient` must be the
/// analytic derivative of `mean_field_energy`.
pub trait Pubo {
    fn num_vars(&self) -> usize;

    /// Energy of a binary assignment (`s.len() == num_vars`).
    fn energy(&self, s: &[bool]) -> f64;

    /// Multilinear extension evaluated at expectations `x`.
    ///
    /// May be called with coordinates outside `[0,1]` (the accelerated
    /// solver evaluates gradients at extrapolated points); the polynomial
    /// is well defined everywhere.
    fn mean_field_energy(&self, x: &[f64]) -> f64;

    /// Gradient of the multilinear extension, written into `grad`.
    fn gradient(&self, x: &[f64], grad: &mut [f64]);
}

/// One monomial `coeff * prod_i s_i` of an explicit PUBO polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct PuboTerm {
    pub coeff: f64,
    /// Strictly increasing variable indices; distinctness keeps the
    /// polynomial multilinear.
    pub vars: Vec<usize>,
}

/// Explicit coefficient-list PUBO problem.
#[derive(Debug, Clone)]
pub struct PolyPubo {
    num_vars: usize,
    terms: Vec<PuboTerm>,
}

impl PolyPubo {
    pub fn new(num_vars: usize, terms: Vec<PuboTerm>) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::invalid("PUBO problem needs at least one variable"));
        }
        for term in &terms {
            if !term.coeff.is_finite() {
                return Err(Error::invalid("non-finite PUBO coefficient"));
            }
            for pair in term.vars.windows(2) {
                if pair[0] >= pair[1] {
                    return Err(Error::invalid(
                        "PUBO term variables must be strictly increasing",
                    ));
                }
            }
            if let Some(&last) = term.vars.last() {
                if last >= num_vars {
                    return Err(Error::invalid(format!(
                        "PUBO term references variable {last}, but the problem has {num_vars}"
                    )));
                }
            }
        }
        Ok(Self { num_vars, terms })
    }

    pub fn terms(&self) -> &[PuboTerm] {
        &self.terms
    }

    /// Random instance with `num_terms` monomials of degree `1..=max_degree`
    /// and coefficients uniform in `[-scale, scale]`.
    pub fn random(
        num_vars: usize,
        max_degree: usize,
        num_terms: usize,
        scale: f64,
        rng: &mut impl Rng,
    ) -> Self {
        assert!(num_vars > 0 && max_degree >= 1 && max_degree <= num_vars);
        let mut terms = Vec::with_capacity(num_terms);
        for _ in 0..num_terms {
            let degree = rng.random_range(1..=max_degree);
            let mut vars = Vec::with_capacity(degree);
            while vars.len() < degree {
                let v = rng.random_range(0..num_vars);
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            vars.sort_unstable();
            let coeff = rng.random_range(-scale..scale);
            terms.push(PuboTerm { coeff, vars });
        }
        Self { num_vars, terms }
    }

    /// Dense random quadratic (QUBO) instance: every linear and pairwise
    /// coefficient drawn uniformly from `[-scale, scale]`.
    pub fn random_quadratic(num_vars: usize, scale: f64, rng: &mut impl Rng) -> Self {
        assert!(num_vars > 0);
        let mut terms = Vec::new();
        for i in 0..num_vars {
            terms.push(PuboTerm {
                coeff: rng.random_range(-scale..scale),
                vars: vec![i],
            });
        }
        for i in 0..num_vars {
            for j in (i + 1)..num_vars {
                terms.push(PuboTerm {
                    coeff: rng.random_range(-scale..scale),
                    vars: vec![i, j],
                });
            }
        }
        Self { num_vars, terms }
    }
}

impl Pubo for PolyPubo {
    fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn energy(&self, s: &[bool]) -> f64 {
        debug_assert_eq!(s.len(), self.num_vars);
        self.terms
            .iter()
            .filter(|t| t.vars.iter().all(|&v| s[v]))
            .map(|t| t.coeff)
            .sum()
    }

    fn mean_field_energy(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.num_vars);
        self.terms
            .iter()
            .map(|t| t.coeff * t.vars.iter().map(|&v| x[v]).product::<f64>())
            .sum()
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        debug_assert_eq!(x.len(), self.num_vars);
        debug_assert_eq!(grad.len(), self.num_vars);
        grad.fill(0.0);
        for term in &self.terms {
            for (skip, &v) in term.vars.iter().enumerate() {
                let partial: f64 = term
                    .vars
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, &w)| x[w])
                    .product();
                grad[v] += term.coeff * partial;
            }
        }
    }
}

fn check_temperature(temperature: f64) -> Result<()> {
    if !temperature.is_finite() || temperature <= 0.0 {
        return Err(Error::invalid(format!(
            "temperature must be positive and finite, got {temperature}"
        )));
    }
    Ok(())
}

fn check_interior(x: &[f64], num_vars: usize) -> Result<()> {
    if x.len() != num_vars {
        return Err(Error::invalid(format!(
            "expectation vector has length {}, problem has {} variables",
            x.len(),
            num_vars
        )));
    }
    for (i, &xi) in x.iter().enumerate() {
        if !(xi > 0.0 && xi < 1.0) {
            return Err(Error::invalid(format!(
                "x[{i}] = {xi} is outside the open interval (0, 1); the entropy term is undefined"
            )));
        }
    }
    Ok(())
}

/// Mean-field entropy contribution `sum_i [(1-x_i) ln(1-x_i) + x_i ln x_i]`.
fn negative_entropy(x: &[f64]) -> f64 {
    x.iter()
        .map(|&xi| (1.0 - xi) * (1.0 - xi).ln() + xi * xi.ln())
        .sum()
}

/// Constant-shifted KL objective: `L(x)/T + sum_i [(1-x_i) ln(1-x_i) + x_i ln x_i]`.
///
/// This is the KL divergence minus `ln Z`; the partition term does not
/// depend on `x`, so descent on this objective is descent on the KL proper.
pub fn kl_objective<P: Pubo>(x: &[f64], problem: &P, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    check_interior(x, problem.num_vars())?;
    Ok(problem.mean_field_energy(x) / temperature + negative_entropy(x))
}

/// Full KL divergence between the product distribution with marginals `x`
/// and the canonical distribution at `temperature`.
///
/// `ln Z` is computed by exhaustive enumeration, so this is only usable for
/// small problems (`num_vars <= MAX_ENUM_VARS`); it exists for validation.
pub fn kl_divergence<P: Pubo>(x: &[f64], problem: &P, temperature: f64) -> Result<f64> {
    let shifted = kl_objective(x, problem, temperature)?;
    let ln_z = ln_partition(problem, temperature)?;
    Ok(shifted + ln_z)
}

/// `ln Z = ln sum_s exp(-L(s)/T)` by enumeration with a running log-sum-exp.
pub fn ln_partition<P: Pubo>(problem: &P, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    let n = problem.num_vars();
    if n > MAX_ENUM_VARS {
        return Err(Error::TooManyVariables {
            vars: n,
            max: MAX_ENUM_VARS,
        });
    }
    let mut assignment = vec![false; n];
    let mut running_max = f64::NEG_INFINITY;
    let mut running_sum = 0.0;
    for mask in 0u64..(1u64 << n) {
        for (i, slot) in assignment.iter_mut().enumerate() {
            *slot = (mask >> i) & 1 == 1;
        }
        let e = -problem.energy(&assignment) / temperature;
        if e > running_max {
            running_sum = running_sum * (running_max - e).exp() + 1.0;
            running_max = e;
        } else {
            running_sum += (e - running_max).exp();
        }
    }
    Ok(running_max + running_sum.ln())
}

/// Exhaustive global minimizer. Ties break toward the lexicographically
/// first assignment (variable 0 is the least significant bit).
pub fn brute_force_min<P: Pubo>(problem: &P) -> Result<(Vec<bool>, f64)> {
    let n = problem.num_vars();
    if n > MAX_ENUM_VARS {
        return Err(Error::TooManyVariables {
            vars: n,
            max: MAX_ENUM_VARS,
        });
    }
    let mut assignment = vec![false; n];
    let mut best = vec![false; n];
    let mut best_energy = f64::INFINITY;
    for mask in 0u64..(1u64 << n) {
        for (i, slot) in assignment.iter_mut().enumerate() {
            *slot = (mask >> i) & 1 == 1;
        }
        let e = problem.energy(&assignment);
        if e < best_energy {
            best_energy = e;
            best.copy_from_slice(&assignment);
        }
    }
    Ok((best, best_energy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_var(coeff: f64) -> PolyPubo {
        PolyPubo::new(
            1,
            vec![PuboTerm {
                coeff,
                vars: vec![0],
            }],
        )
        .unwrap()
    }

    #[test]
    fn kl_uniform_matches_canonical_for_zero_energy() {
        // L = 0: the canonical distribution is uniform, x = 0.5 matches it.
        let p = PolyPubo::new(1, vec![]).unwrap();
        for temperature in [0.1, 1.0, 7.0] {
            let kl = kl_divergence(&[0.5], &p, temperature).unwrap();
            assert!(kl.abs() < 1e-12, "kl = {kl}");
        }
    }

    #[test]
    fn kl_two_variable_product_term_matches_enumeration() {
        // L(s) = s1 s2 at T = 1, x = (0.5, 0.5): four states, enumerated
        // directly from the definition.
        let p = PolyPubo::new(
            2,
            vec![PuboTerm {
                coeff: 1.0,
                vars: vec![0, 1],
            }],
        )
        .unwrap();
        let x = [0.5, 0.5];
        let formula = kl_divergence(&x, &p, 1.0).unwrap();
        let weights = [1.0, 1.0, 1.0, (-1.0f64).exp()];
        let z: f64 = weights.iter().sum();
        let enumerated: f64 = weights.iter().map(|w| 0.25 * (0.25 * z / w).ln()).sum();
        assert!(
            (formula - enumerated).abs() < 1e-12,
            "formula {formula} vs enumerated {enumerated}"
        );
    }

    #[test]
    fn kl_rejects_boundary_and_bad_temperature() {
        let p = single_var(1.0);
        assert!(kl_divergence(&[0.0], &p, 1.0).is_err());
        assert!(kl_divergence(&[1.0], &p, 1.0).is_err());
        assert!(kl_divergence(&[0.5], &p, 0.0).is_err());
        assert!(kl_divergence(&[0.5], &p, -1.0).is_err());
    }

    #[test]
    fn brute_force_trivial_cases() {
        let p = single_var(1.0);
        let (s, e) = brute_force_min(&p).unwrap();
        assert_eq!(s, vec![false]);
        assert_eq!(e, 0.0);

        let cubic = PolyPubo::new(
            3,
            vec![PuboTerm {
                coeff: -1.0,
                vars: vec![0, 1, 2],
            }],
        )
        .unwrap();
        let (s, e) = brute_force_min(&cubic).unwrap();
        assert_eq!(s, vec![true, true, true]);
        assert_eq!(e, -1.0);
    }

    #[test]
    fn brute_force_beats_random_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = PolyPubo::random_quadratic(10, 1.0, &mut rng);
        let (_, best) = brute_force_min(&p).unwrap();
        let mut sample = vec![false; 10];
        for _ in 0..1000 {
            for slot in sample.iter_mut() {
                *slot = rng.random_range(0..2) == 1;
            }
            assert!(best <= p.energy(&sample) + 1e-12);
        }
    }

    #[test]
    fn brute_force_rejects_large_problems() {
        let p = PolyPubo::new(30, vec![]).unwrap();
        assert!(matches!(
            brute_force_min(&p),
            Err(Error::TooManyVariables { .. })
        ));
    }

    #[test]
    fn extension_agrees_with_energy_on_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = PolyPubo::random(8, 3, 40, 1.0, &mut rng);
        let mut s = vec![false; 8];
        let mut x = vec![0.0; 8];
        for mask in 0u32..256 {
            for i in 0..8 {
                s[i] = (mask >> i) & 1 == 1;
                x[i] = if s[i] { 1.0 } else { 0.0 };
            }
            assert_eq!(p.energy(&s), p.mean_field_energy(&x));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = PolyPubo::random(12, 3, 60, 1.0, &mut rng);
        let h = 1e-6;
        for _ in 0..20 {
            let x: Vec<f64> = (0..12).map(|_| rng.random_range(0.05..0.95)).collect();
            let mut grad = vec![0.0; 12];
            p.gradient(&x, &mut grad);
            for i in 0..12 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (p.mean_field_energy(&xp) - p.mean_field_energy(&xm)) / (2.0 * h);
                let denom = fd.abs().max(1e-6);
                assert!(
                    (grad[i] - fd).abs() / denom < 1e-5,
                    "grad[{i}] = {}, fd = {fd}",
                    grad[i]
                );
            }
        }
    }
}
