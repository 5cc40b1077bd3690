//! Driver procedures built on [`eps_est`]: adaptive shrinking of the prior
//! bound when `ε` is unknown, and a bisection search for the median.

use crate::dataset::Dataset;
use crate::driver::{Mode, RunPlan, MAX_EPS0};
use crate::error::{Error, Result};
use crate::estimator::{eps_est, EstimateRecord, Verdict};
use crate::rng::derive_seed;

/// An estimate counts as resolved once `|est| > BREAK_RATIO · ε₀`.
pub const BREAK_RATIO: f64 = 0.2;

/// How `ε₀` shrinks between passes that found nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Eps0Update {
    /// `ε₀ ← ε₀ / 2`.
    #[default]
    Halve,
    /// `ε₀ ← |est| / 2`, jumping straight to the scale of the last estimate.
    HalfEstimate,
}

/// Settings shared by the adaptive estimator and the median search.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub theta: f64,
    pub kappa: f64,
    pub mode: Mode,
    pub seed: u64,
    pub update: Eps0Update,
    /// Overrides `α = ceil(1/θ²)` on every pass.
    pub alpha: Option<u64>,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            theta: 0.1,
            kappa: 3.0,
            mode: Mode::Exact,
            seed: 0,
            update: Eps0Update::Halve,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOutcome {
    pub record: EstimateRecord,
    /// Number of `eps_est` calls made.
    pub calls: u32,
    /// `ε₀` used on each call, in order.
    pub eps0_trace: Vec<f64>,
}

/// Estimates `ε` at `mu` without a prior bound by starting at `ε₀ = 0.1` and
/// shrinking it until the estimate stands out against the current scale.
pub fn eps_est_adaptive(
    dataset: &Dataset,
    mu: f64,
    eps_min: f64,
    config: &AdaptiveConfig,
) -> Result<AdaptiveOutcome> {
    if !(eps_min > 0.0 && eps_min < MAX_EPS0) {
        return Err(Error::Parameter(format!(
            "eps_min must lie in (0, {MAX_EPS0}), got {eps_min}"
        )));
    }
    let mut eps0 = MAX_EPS0;
    let mut eps0_trace = Vec::new();
    loop {
        let pass = eps0_trace.len() as u64;
        let mut plan = RunPlan::new(eps0, config.theta, config.kappa, config.mode, derive_seed(config.seed, pass))?;
        if let Some(alpha) = config.alpha {
            plan = plan.with_alpha(alpha)?;
        }
        let record = eps_est(dataset, mu, &plan)?;
        eps0_trace.push(eps0);

        if record.verdict == Verdict::EpsExceedsEps0 || record.eps_abs > BREAK_RATIO * eps0 {
            return Ok(finish(record, eps0_trace));
        }
        eps0 = match config.update {
            Eps0Update::Halve => eps0 / 2.0,
            Eps0Update::HalfEstimate => record.eps_abs * 0.5,
        };
        if !(eps0 > eps_min) {
            return Ok(finish(record, eps0_trace));
        }
    }
}

fn finish(record: EstimateRecord, eps0_trace: Vec<f64>) -> AdaptiveOutcome {
    AdaptiveOutcome {
        record,
        calls: eps0_trace.len() as u32,
        eps0_trace,
    }
}

/// One bisection step of [`median_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchStep {
    pub mu: f64,
    pub eps_hat: f64,
    pub calls: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedianOutcome {
    pub mu_hat: f64,
    /// Count of dataset values strictly below `mu_hat`.
    pub rank_below: usize,
    pub steps: u32,
    /// Total `eps_est` calls across all steps.
    pub calls: u32,
    pub trace: Vec<SearchStep>,
}

/// Bisects `[min, max]` on the threshold until the bracket is at most `resolution` wide.
///
/// A positive signed estimate at the midpoint means more than half the
/// values lie below it, so the upper end moves down; anything else moves
/// the lower end up.
pub fn median_search(
    dataset: &Dataset,
    min: f64,
    max: f64,
    resolution: f64,
    eps_min: f64,
    config: &AdaptiveConfig,
) -> Result<MedianOutcome> {
    if !(min.is_finite() && max.is_finite() && min < max) {
        return Err(Error::Parameter(format!("need finite min < max, got [{min}, {max}]")));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::Parameter(format!("resolution must be positive, got {resolution}")));
    }
    let (mut lower, mut upper) = (min, max);
    let mut trace = Vec::new();
    let mut calls = 0;
    // halving is exact, so the step count does not drift with bracket rounding
    let mut steps = 0u32;
    let mut width = max - min;
    while width > resolution {
        width *= 0.5;
        steps += 1;
    }
    for _ in 0..steps {
        let mu = 0.5 * (lower + upper);
        if mu <= lower || mu >= upper {
            // bracket no longer splits in floating point
            break;
        }
        let step_config = AdaptiveConfig {
            seed: derive_seed(config.seed, trace.len() as u64),
            ..config.clone()
        };
        let outcome = eps_est_adaptive(dataset, mu, eps_min, &step_config)?;
        let eps_hat = outcome.record.eps_hat;
        if eps_hat > 0.0 {
            upper = mu;
        } else {
            lower = mu;
        }
        calls += outcome.calls;
        trace.push(SearchStep {
            mu,
            eps_hat,
            calls: outcome.calls,
        });
    }
    let mu_hat = 0.5 * (lower + upper);
    Ok(MedianOutcome {
        mu_hat,
        rank_below: dataset.rank_below(mu_hat),
        steps: trace.len() as u32,
        calls,
        trace,
    })
}
