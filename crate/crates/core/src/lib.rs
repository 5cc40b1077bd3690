//! Deterministic simulation of quantum amplitude amplification for median
//! estimation.
//!
//! The register is prepared so that every state whose value lies below a
//! threshold shares one amplitude, then amplified until the below-threshold
//! probability reveals the imbalance `ε` between the two sides. The crate
//! provides the state-vector simulator, the closed-form two-amplitude model
//! it is verified against, the inversion from measured fractions back to
//! `ε`, and the adaptive and binary-search drivers that estimate a median.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod search;
pub mod baseline;
pub mod check;
pub mod dataset;
pub mod driver;
mod error;
pub mod estimator;
pub mod rng;
pub mod statevector;

pub use analytic::{
    k_closed_form, k_small_eps_approx, l_closed_form, predicted_fraction, LoopAngles, TwoAmpState,
};
pub use search::{eps_est_adaptive, median_search, AdaptiveConfig, AdaptiveOutcome, Eps0Update, MedianOutcome};
pub use baseline::{classical_estimate, classical_sample_budget, ClassicalEstimate};
pub use dataset::{load_dataset, make_oracle, synth_dataset, Dataset, SynthDataset, ThresholdOracle};
pub use driver::{
    amplification_loop, choose_alpha, choose_beta, prepare, run_experiment, ExperimentResult, Mode, RunPlan,
};
pub use error::{Error, Result};
pub use estimator::{
    confidence_interval, eps_est, invert_fraction, resolve_sign, EstimateRecord, Sign, Verdict,
};
pub use rng::SplitMix64;
pub use statevector::{BasisIndex, Mask, StateVector};
