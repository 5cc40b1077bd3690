//! Classical Monte Carlo estimate of the imbalance, for comparing sample budgets.

use crate::dataset::ThresholdOracle;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalEstimate {
    pub f_hat: f64,
    pub eps_hat: f64,
    pub samples: u64,
}

impl ClassicalEstimate {
    /// Binomial standard error of `eps_hat = 2f̂ - 1`.
    pub fn stderr_model(&self) -> f64 {
        2.0 * (self.f_hat * (1.0 - self.f_hat) / self.samples as f64).sqrt()
    }
}

/// Draws `samples` states uniformly with replacement and counts those below the threshold.
pub fn classical_estimate(oracle: &ThresholdOracle, samples: u64, seed: u64) -> Result<ClassicalEstimate> {
    if samples == 0 {
        return Err(Error::Parameter("sample count must be at least 1".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let len = oracle.len() as u64;
    let below = oracle.below_mask();
    let hits = (0..samples)
        .filter(|_| below.contains(rng.next_below(len) as usize))
        .count();
    let f_hat = hits as f64 / samples as f64;
    Ok(ClassicalEstimate {
        f_hat,
        eps_hat: 2.0 * f_hat - 1.0,
        samples,
    })
}

/// Samples needed for absolute precision `precision` in `ε`: `ceil(1/precision²)`.
pub fn classical_sample_budget(precision: f64) -> Result<u64> {
    if !(precision > 0.0 && precision <= 1.0) {
        return Err(Error::Parameter(format!(
            "precision must lie in (0, 1], got {precision}"
        )));
    }
    Ok(((1.0 / (precision * precision)) * (1.0 - 1e-12)).ceil().max(1.0) as u64)
}
