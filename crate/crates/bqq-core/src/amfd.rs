//! Annealed mean field descent (AMFD) for PUBO problems.
//!
//! The solver relaxes binary variables to expectations `x in [0,1]^N` and
//! performs accelerated gradient descent on the KL divergence between the
//! product distribution with marginals `x` and the canonical distribution,
//! while the temperature anneals linearly from `t_init` to `t_fin`. One
//! iteration is:
//!
//! ```text
//! x_fwd <- x_cur + zeta (x_cur - x_old)
//! phi   <- grad L(x_fwd)
//! f     <- T (x_cur - 0.5)
//! x_new <- clip(2 x_cur - x_old - eta (f + phi), 0, 1)
//! T     <- T - delta_T
//! ```
//!
//! The entropy force `f` uses the second-order Taylor expansion of the
//! entropy term around `x = 0.5` instead of the exact `ln(x/(1-x))`
//! gradient, which would overflow at the boundary. The module is fully
//! deterministic given the caller-provided state; it contains no randomness
//! of its own.

use crate::error::{Error, Result};
use crate::pubo::Pubo;
use rand::Rng;

/// Annealing schedule and step sizes.
///
/// `delta_t` is derived: `(t_init - t_fin) / (n_step - 1)`, or 0 for a
/// single-step schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealParams {
    pub t_init: f64,
    pub t_fin: f64,
    pub n_step: usize,
    /// Learning rate.
    pub eta: f64,
    /// Accelerating (momentum extrapolation) rate.
    pub zeta: f64,
}

impl Default for AnnealParams {
    /// Defaults used throughout the reference experiments.
    fn default() -> Self {
        Self {
            t_init: 0.2,
            t_fin: 0.005,
            n_step: 50_000,
            eta: 0.06,
            zeta: 4.0,
        }
    }
}

impl AnnealParams {
    pub fn validate(&self) -> Result<()> {
        if self.t_fin.is_nan() || self.t_init.is_nan() || self.t_fin <= 0.0 || self.t_init < self.t_fin {
            return Err(Error::invalid(format!(
                "annealing temperatures must satisfy t_init >= t_fin > 0, got {} -> {}",
                self.t_init, self.t_fin
            )));
        }
        if self.n_step == 0 {
            return Err(Error::invalid("n_step must be at least 1"));
        }
        if !self.eta.is_finite() || !self.zeta.is_finite() || self.eta <= 0.0 || self.zeta < 0.0 {
            return Err(Error::invalid(format!(
                "step sizes must be finite with eta > 0 and zeta >= 0, got eta = {}, zeta = {}",
                self.eta, self.zeta
            )));
        }
        Ok(())
    }

    /// Per-iteration temperature decrement.
    pub fn delta_t(&self) -> f64 {
        if self.n_step <= 1 {
            0.0
        } else {
            (self.t_init - self.t_fin) / (self.n_step - 1) as f64
        }
    }

    /// Copy with a different step count (used to shorten runs in tests and
    /// sweeps; the schedule endpoints stay the same).
    pub fn with_steps(mut self, n_step: usize) -> Self {
        self.n_step = n_step;
        self
    }
}

/// Relaxation state: current and previous expectations plus temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState {
    x_cur: Vec<f64>,
    x_old: Vec<f64>,
    temperature: f64,
}

impl MeanFieldState {
    pub fn new(x_cur: Vec<f64>, x_old: Vec<f64>, temperature: f64) -> Result<Self> {
        if x_cur.len() != x_old.len() || x_cur.is_empty() {
            return Err(Error::invalid(
                "x_cur and x_old must be non-empty and equally sized",
            ));
        }
        if !temperature.is_finite() || temperature <= 0.0 {
            return Err(Error::invalid(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        for v in x_cur.iter().chain(&x_old) {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::invalid(format!(
                    "expectation {v} is outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            x_cur,
            x_old,
            temperature,
        })
    }

    /// Initial state: `x_old ~ U(0,1)`, then one damping pre-step
    /// `x_cur = x_old - eta (x_old - 0.5)` toward the center.
    pub fn uniform_random(
        num_vars: usize,
        params: &AnnealParams,
        rng: &mut impl Rng,
    ) -> Self {
        let x_old: Vec<f64> = (0..num_vars).map(|_| rng.random::<f64>()).collect();
        let x_cur = x_old
            .iter()
            .map(|&v| v - params.eta * (v - 0.5))
            .collect();
        Self {
            x_cur,
            x_old,
            temperature: params.t_init,
        }
    }

    #[inline]
    pub fn x_cur(&self) -> &[f64] {
        &self.x_cur
    }

    #[inline]
    pub fn x_old(&self) -> &[f64] {
        &self.x_old
    }

    #[inline]
    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Binarize to the higher-probability value (`x >= 0.5` maps to 1).
    pub fn round(&self) -> Vec<bool> {
        self.x_cur.iter().map(|&v| v >= 0.5).collect()
    }

    /// One in-place AMFD iteration; `scratch` avoids per-step allocation.
    pub fn advance<P: Pubo>(&mut self, problem: &P, params: &AnnealParams, scratch: &mut AmfdScratch) {
        let n = self.x_cur.len();
        debug_assert_eq!(problem.num_vars(), n);
        scratch.resize(n);

        for i in 0..n {
            scratch.fwd[i] = self.x_cur[i] + params.zeta * (self.x_cur[i] - self.x_old[i]);
        }
        problem.gradient(&scratch.fwd, &mut scratch.grad);

        let temperature = self.temperature;
        for i in 0..n {
            let cur = self.x_cur[i];
            let entropy_force = temperature * (cur - 0.5);
            let next = 2.0 * cur - self.x_old[i] - params.eta * (entropy_force + scratch.grad[i]);
            // Writing into x_old then swapping makes the previous x_cur the
            // new x_old without allocating.
            self.x_old[i] = next.clamp(0.0, 1.0);
        }
        std::mem::swap(&mut self.x_cur, &mut self.x_old);
        self.temperature -= params.delta_t();
    }
}

/// Reusable buffers for [`MeanFieldState::advance`].
#[derive(Debug, Default)]
pub struct AmfdScratch {
    fwd: Vec<f64>,
    grad: Vec<f64>,
}

impl AmfdScratch {
    pub fn new() -> Self {
        Self::default()
    }

    fn resize(&mut self, n: usize) {
        self.fwd.resize(n, 0.0);
        self.grad.resize(n, 0.0);
    }
}

/// One AMFD iteration as a pure function.
pub fn amfd_step<P: Pubo>(
    state: &MeanFieldState,
    problem: &P,
    params: &AnnealParams,
) -> MeanFieldState {
    let mut next = state.clone();
    let mut scratch = AmfdScratch::new();
    next.advance(problem, params, &mut scratch);
    next
}

/// Run the full annealing schedule from a seeded random initialization and
/// return the final state.
pub fn anneal<P: Pubo>(problem: &P, params: &AnnealParams, rng: &mut impl Rng) -> Result<MeanFieldState> {
    params.validate()?;
    let mut state = MeanFieldState::uniform_random(problem.num_vars(), params, rng);
    let mut scratch = AmfdScratch::new();
    for _ in 0..params.n_step {
        state.advance(problem, params, &mut scratch);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pubo::{brute_force_min, PolyPubo, PuboTerm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(eta: f64, zeta: f64) -> AnnealParams {
        AnnealParams {
            t_init: 1.0,
            t_fin: 0.01,
            n_step: 100,
            eta,
            zeta,
        }
    }

    #[test]
    fn delta_t_handles_single_step() {
        let p = AnnealParams {
            n_step: 1,
            ..AnnealParams::default()
        };
        assert_eq!(p.delta_t(), 0.0);
        let p = AnnealParams {
            t_init: 0.2,
            t_fin: 0.005,
            n_step: 50_000,
            ..AnnealParams::default()
        };
        let expect = (0.2 - 0.005) / 49_999.0;
        assert!((p.delta_t() - expect).abs() < 1e-18);
    }

    #[test]
    fn center_is_fixed_point_without_gradient() {
        let p = PolyPubo::new(3, vec![]).unwrap();
        let state = MeanFieldState::new(vec![0.5; 3], vec![0.5; 3], 1.0).unwrap();
        let pr = params(0.1, 0.0);
        let next = amfd_step(&state, &p, &pr);
        assert_eq!(next.x_cur(), &[0.5; 3]);
        assert_eq!(next.x_old(), &[0.5; 3]);
        assert!((next.temperature() - (1.0 - pr.delta_t())).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_entropy_step() {
        // x_cur = x_old = 0.8, T = 1, eta = 0.1, zeta = 0, zero gradient:
        // x_new = 0.8 - 0.1 * (0.8 - 0.5) = 0.77.
        let p = PolyPubo::new(1, vec![]).unwrap();
        let state = MeanFieldState::new(vec![0.8], vec![0.8], 1.0).unwrap();
        let next = amfd_step(&state, &p, &params(0.1, 0.0));
        assert!((next.x_cur()[0] - 0.77).abs() < 1e-15);
        assert_eq!(next.x_old(), &[0.8]);
    }

    #[test]
    fn linear_energy_drives_to_zero() {
        // L(s) = s1 + s2 has minimizer (0, 0).
        let p = PolyPubo::new(
            2,
            vec![
                PuboTerm {
                    coeff: 1.0,
                    vars: vec![0],
                },
                PuboTerm {
                    coeff: 1.0,
                    vars: vec![1],
                },
            ],
        )
        .unwrap();
        let pr = AnnealParams {
            t_init: 0.2,
            t_fin: 0.005,
            n_step: 500,
            eta: 0.06,
            zeta: 4.0,
        };
        let mut state = MeanFieldState::new(vec![0.5; 2], vec![0.5; 2], pr.t_init).unwrap();
        let mut scratch = AmfdScratch::new();
        for _ in 0..pr.n_step {
            state.advance(&p, &pr, &mut scratch);
        }
        assert_eq!(state.round(), vec![false, false]);
        let (s, _) = brute_force_min(&p).unwrap();
        assert_eq!(state.round(), s);
    }

    #[test]
    fn iterates_stay_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let p = PolyPubo::random(16, 3, 80, 2.0, &mut rng);
        let pr = AnnealParams {
            n_step: 300,
            ..AnnealParams::default()
        };
        let mut state = MeanFieldState::uniform_random(16, &pr, &mut rng);
        let mut scratch = AmfdScratch::new();
        for _ in 0..pr.n_step {
            state.advance(&p, &pr, &mut scratch);
            assert!(state
                .x_cur()
                .iter()
                .all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn anneal_is_deterministic_given_seed() {
        let p = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            PolyPubo::random_quadratic(12, 1.0, &mut rng)
        };
        let pr = AnnealParams {
            n_step: 400,
            ..AnnealParams::default()
        };
        let a = anneal(&p, &pr, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = anneal(&p, &pr, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
    }
}
