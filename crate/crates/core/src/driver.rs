//! Runs the amplification algorithm on a simulated register.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::ThresholdOracle;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};
use crate::statevector::StateVector;

/// `β = floor(1 / (BETA_DIVISOR · ε₀))` keeps `β·|ε| ≤ 0.05` for `|ε| ≤ ε₀`.
pub const BETA_DIVISOR: f64 = 20.0;

/// Largest prior bound the algorithm is defined for.
pub const MAX_EPS0: f64 = 0.1;

const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// How the final register is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Read the below-threshold probability directly off the amplitudes.
    Exact,
    /// Draw `α` basis states and count how many fall below the threshold.
    #[serde(rename = "sample")]
    Sampled,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Sampled => "sample",
        })
    }
}

/// Parameters of one estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub eps0: f64,
    pub theta: f64,
    pub kappa: f64,
    pub alpha: u64,
    pub beta: u64,
    pub mode: Mode,
    pub seed: u64,
    /// Re-prepare the register for every sample instead of reusing one final state.
    pub resimulate: bool,
}

impl RunPlan {
    /// Plan with `α` and `β` chosen from `θ` and `ε₀`.
    pub fn new(eps0: f64, theta: f64, kappa: f64, mode: Mode, seed: u64) -> Result<Self> {
        let plan = Self {
            eps0,
            theta,
            kappa,
            alpha: choose_alpha(theta)?,
            beta: choose_beta(eps0)?,
            mode,
            seed,
            resimulate: false,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_alpha(mut self, alpha: u64) -> Result<Self> {
        self.alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn with_beta(mut self, beta: u64) -> Result<Self> {
        self.beta = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0 && self.eps0 <= MAX_EPS0) {
            return Err(Error::Parameter(format!(
                "eps0 must lie in (0, {MAX_EPS0}], got {}",
                self.eps0
            )));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::Parameter(format!("theta must be positive, got {}", self.theta)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::Parameter(format!("kappa must be positive, got {}", self.kappa)));
        }
        if self.alpha == 0 {
            return Err(Error::Parameter("alpha must be at least 1".into()));
        }
        if self.beta == 0 {
            return Err(Error::Parameter("beta must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Measured below-threshold fraction (equals `exact_p` in exact mode).
    pub f_hat: f64,
    /// Below-threshold probability of the final register.
    pub exact_p: f64,
    pub alpha: u64,
    pub beta: u64,
    /// Number of samples that landed below the threshold (sampled mode only).
    pub below_count: Option<u64>,
}

/// Uniform superposition, quarter-turn phase on the
/// above-threshold states, then the shift transform.
pub fn prepare(oracle: &ThresholdOracle) -> Result<StateVector> {
    let mut state = StateVector::uniform(oracle.n())?;
    state.conditional_phase(&oracle.above_mask(), FRAC_PI_2)?;
    state.shift();
    Ok(state)
}

/// `beta` iterations of: flip below, diffuse, flip above, diffuse.
pub fn amplification_loop(state: &mut StateVector, oracle: &ThresholdOracle, beta: u64) -> Result<()> {
    let below = oracle.below_mask();
    let above = oracle.above_mask();
    for _ in 0..beta {
        state.conditional_phase(below, PI)?;
        state.diffusion();
        state.conditional_phase(&above, PI)?;
        state.diffusion();
    }
    Ok(())
}

fn final_state(oracle: &ThresholdOracle, beta: u64) -> Result<StateVector> {
    let mut state = prepare(oracle)?;
    amplification_loop(&mut state, oracle, beta)?;
    let drift = (state.norm_sqr() - 1.0).abs();
    if drift > NORM_DRIFT_LIMIT {
        return Err(Error::Numerical(format!("norm drifted by {drift:e}")));
    }
    Ok(state)
}

/// Runs the full algorithm described by `plan` against `oracle`.
pub fn run_experiment(oracle: &ThresholdOracle, plan: &RunPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    measure(oracle, plan.beta, plan.alpha, plan.mode, plan.seed, plan.resimulate)
}

/// Same as [`run_experiment`] without plan validation, so `beta = 0` probes are allowed.
pub(crate) fn measure(
    oracle: &ThresholdOracle,
    beta: u64,
    alpha: u64,
    mode: Mode,
    seed: u64,
    resimulate: bool,
) -> Result<ExperimentResult> {
    let state = final_state(oracle, beta)?;
    let below = oracle.below_mask();
    let exact_p = state.probability_of(below)?;
    match mode {
        Mode::Exact => Ok(ExperimentResult {
            f_hat: exact_p,
            exact_p,
            alpha,
            beta,
            below_count: None,
        }),
        Mode::Sampled => {
            // sample i always draws from its own derived stream, so counts do
            // not depend on scheduling or on `resimulate`
            let hits = if resimulate {
                (0..alpha)
                    .into_par_iter()
                    .map(|i| -> Result<u64> {
                        let fresh = final_state(oracle, beta)?;
                        let mut rng = SplitMix64::new(derive_seed(seed, i));
                        Ok(below.contains(fresh.sample(&mut rng)?.value()) as u64)
                    })
                    .try_reduce(|| 0, |a, b| Ok(a + b))?
            } else {
                let sampler = state.sampler()?;
                (0..alpha)
                    .into_par_iter()
                    .map(|i| {
                        let mut rng = SplitMix64::new(derive_seed(seed, i));
                        below.contains(sampler.draw(&mut rng).value()) as u64
                    })
                    .sum()
            };
            Ok(ExperimentResult {
                f_hat: hits as f64 / alpha as f64,
                exact_p,
                alpha,
                beta,
                below_count: Some(hits),
            })
        }
    }
}

/// Loop count `max(1, floor(1 / (20 ε₀)))`.
pub fn choose_beta(eps0: f64) -> Result<u64> {
    if !(eps0 > 0.0 && eps0 <= MAX_EPS0) {
        return Err(Error::Parameter(format!(
            "eps0 must lie in (0, {MAX_EPS0}], got {eps0}"
        )));
    }
    // the nudge absorbs representation error in e.g. 1/(20·0.01)
    let beta = (1.0 / (BETA_DIVISOR * eps0) * (1.0 + 1e-12)).floor();
    Ok((beta as u64).max(1))
}

/// Repetition count `ceil(1 / θ²)`.
pub fn choose_alpha(theta: f64) -> Result<u64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Parameter(format!("theta must lie in (0, 1], got {theta}")));
    }
    let alpha = (1.0 / (theta * theta) * (1.0 - 1e-12)).ceil();
    Ok((alpha as u64).max(1))
}
