//! Turns measured below-threshold fractions into signed imbalance estimates.
//!
//! The forward map `f(ε) = ½(1 + ε)|k_β(ε)|²` is strictly increasing in `|ε|`
//! on each sign branch while `β·|ε| ≤ 0.2`, so it is inverted by bisection.
//! The sign is decided by re-running at a threshold nudged past the next
//! dataset value and watching which way the measured fraction moves.

use serde::{Serialize, Serializer};

use crate::analytic::predicted_fraction;
use crate::dataset::{make_oracle, Dataset, ThresholdOracle};
use crate::driver::{measure, run_experiment, ExperimentResult, Mode, RunPlan};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// Largest `β·ε_hi` accepted for inversion; the forward map is strictly
/// monotone on both branches well past this point.
pub const MONOTONE_LIMIT: f64 = 0.2;

/// Allowance in fraction space for floating-point error in exact readouts.
pub const EXACT_SLACK: f64 = 1e-14;

const PERTURBED_STREAM: u64 = 0x7065_7274;
const PROBE_STREAM: u64 = 0x7072_6f62;
const MIRROR_STREAM: u64 = 0x6d69_7272;

/// Sign of the imbalance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
    Unknown,
}

impl Sign {
    pub fn factor(self) -> Option<f64> {
        match self {
            Sign::Plus => Some(1.0),
            Sign::Minus => Some(-1.0),
            Sign::Unknown => None,
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Sign::Plus => serializer.serialize_i8(1),
            Sign::Minus => serializer.serialize_i8(-1),
            Sign::Unknown => serializer.serialize_str("unknown"),
        }
    }
}

/// Which half of the forward map an inversion runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    pub fn signed(self, magnitude: f64) -> f64 {
        match self {
            Branch::Positive => magnitude,
            Branch::Negative => -magnitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    InRange,
    /// The measured fraction exceeds what any `|ε| ≤ ε_hi` can produce.
    EpsExceedsEps0,
}

/// A signed imbalance estimate with its confidence interval on `|ε|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRecord {
    /// Signed estimate; zero when the sign could not be decided.
    pub eps_hat: f64,
    pub eps_abs: f64,
    pub sign: Sign,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub verdict: Verdict,
    pub f_hat: f64,
    pub exact_p: f64,
    pub mu: f64,
    pub alpha: u64,
    pub beta: u64,
    pub theta: f64,
    pub kappa: f64,
    pub eps0: f64,
    pub mode: String,
    pub seed: u64,
    pub n: u32,
}

/// Top of the inversion bracket: `2ε₀`, clipped to the monotone regime.
pub fn bracket_top(eps0: f64, beta: u64) -> f64 {
    (2.0 * eps0).min(MONOTONE_LIMIT / beta.max(1) as f64)
}

/// Hoeffding half-width `κ/√α` of the fraction confidence band.
pub fn fraction_half_width(alpha: u64, kappa: f64) -> f64 {
    kappa / (alpha as f64).sqrt()
}

/// Probability that a fraction from `alpha` samples leaves the band: `2·exp(-2κ²)`.
pub fn failure_probability(kappa: f64) -> f64 {
    2.0 * (-2.0 * kappa * kappa).exp()
}

fn check_bracket(beta: u64, eps_hi: f64) -> Result<()> {
    if !(eps_hi > 0.0 && eps_hi <= 1.0) {
        return Err(Error::Parameter(format!(
            "bracket top must lie in (0, 1], got {eps_hi}"
        )));
    }
    if beta as f64 * eps_hi > MONOTONE_LIMIT * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "beta * eps_hi = {} leaves the monotone regime (limit {MONOTONE_LIMIT})",
            beta as f64 * eps_hi
        )));
    }
    Ok(())
}

fn bisect(branch: Branch, target: f64, beta: u64, eps_hi: f64) -> f64 {
    // runs until lo and hi are adjacent doubles
    let (mut lo, mut hi) = (0.0f64, eps_hi);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if predicted_fraction(branch.signed(mid), beta) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if target - predicted_fraction(branch.signed(lo), beta) < predicted_fraction(branch.signed(hi), beta) - target {
        lo
    } else {
        hi
    }
}

/// `|ε|` on `branch` whose predicted fraction equals `f_hat`.
pub fn invert_fraction_on(branch: Branch, f_hat: f64, beta: u64, eps_hi: f64) -> Result<f64> {
    check_bracket(beta, eps_hi)?;
    if !(f_hat >= 0.0) {
        return Err(Error::Parameter(format!("fraction must be non-negative, got {f_hat}")));
    }
    let f_max = predicted_fraction(branch.signed(eps_hi), beta);
    if f_hat > f_max {
        return Err(Error::OutOfRange { f_hat, f_max });
    }
    if f_hat == 0.0 {
        return Ok(0.0);
    }
    if f_hat == f_max {
        return Ok(eps_hi);
    }
    Ok(bisect(branch, f_hat, beta, eps_hi))
}

/// Positive-branch inversion of the measured fraction.
pub fn invert_fraction(f_hat: f64, beta: u64, eps_hi: f64) -> Result<f64> {
    invert_fraction_on(Branch::Positive, f_hat, beta, eps_hi)
}

/// Interval on `|ε|` from the fraction band `f_hat ± κ/√α`.
///
/// `alpha = None` is the exact readout, where the band collapses to `f_hat`.
pub fn confidence_interval_on(
    branch: Branch,
    f_hat: f64,
    alpha: Option<u64>,
    kappa: f64,
    beta: u64,
    eps_hi: f64,
) -> Result<(f64, f64)> {
    check_bracket(beta, eps_hi)?;
    let half = alpha.map_or(0.0, |a| fraction_half_width(a, kappa));
    let f_max = predicted_fraction(branch.signed(eps_hi), beta);
    let low_f = (f_hat - half).max(0.0);
    if low_f > f_max {
        return Err(Error::OutOfRange { f_hat, f_max });
    }
    let high_f = (f_hat + half).min(f_max);
    Ok((
        invert_fraction_on(branch, low_f, beta, eps_hi)?,
        invert_fraction_on(branch, high_f, beta, eps_hi)?,
    ))
}

pub fn confidence_interval(
    f_hat: f64,
    alpha: Option<u64>,
    kappa: f64,
    beta: u64,
    eps_hi: f64,
) -> Result<(f64, f64)> {
    confidence_interval_on(Branch::Positive, f_hat, alpha, kappa, beta, eps_hi)
}

/// A measured fraction with the band it is trusted to within.
#[derive(Debug, Clone, Copy)]
struct Band {
    f: f64,
    half: f64,
}

impl Band {
    fn new(result: &ExperimentResult, plan: &RunPlan) -> Self {
        let half = match plan.mode {
            Mode::Exact => EXACT_SLACK,
            Mode::Sampled => fraction_half_width(result.alpha, plan.kappa) + EXACT_SLACK,
        };
        Self { f: result.f_hat, half }
    }

    fn lo(&self) -> f64 {
        self.f - self.half
    }

    fn hi(&self) -> f64 {
        self.f + self.half
    }

    /// `Plus` if `self` sits entirely above `other`, `Minus` if entirely below.
    fn compare(&self, other: &Band) -> Sign {
        if self.lo() > other.hi() {
            Sign::Plus
        } else if self.hi() < other.lo() {
            Sign::Minus
        } else {
            Sign::Unknown
        }
    }
}

/// Readout straight after preparation on the oracle and on its mirror.
///
/// Below-fractions there are `½(1 + ε)ε²` and `½(1 - ε)ε²`: their sum is
/// `ε²` and their difference `ε³`, valid for every `ε ∈ [-1, 1]`.
struct CoarseProbe {
    direct: Band,
    mirror: Band,
}

impl CoarseProbe {
    fn run(oracle: &ThresholdOracle, plan: &RunPlan) -> Result<Self> {
        let direct = measure(oracle, 0, plan.alpha, plan.mode, derive_seed(plan.seed, PROBE_STREAM), false)?;
        let mirror = measure(
            &oracle.mirrored(),
            0,
            plan.alpha,
            plan.mode,
            derive_seed(plan.seed, MIRROR_STREAM),
            false,
        )?;
        Ok(Self {
            direct: Band::new(&direct, plan),
            mirror: Band::new(&mirror, plan),
        })
    }

    /// Lower confidence bound on `|ε|`.
    fn magnitude_floor(&self) -> f64 {
        (self.direct.lo() + self.mirror.lo()).max(0.0).sqrt()
    }

    fn sign(&self) -> Sign {
        self.direct.compare(&self.mirror)
    }
}

/// Threshold just past the smallest value `>= mu`, moving at least one value below.
fn perturbed_threshold(dataset: &Dataset, mu: f64) -> Result<f64> {
    dataset
        .first_at_or_above(mu)
        .map(f64::next_up)
        .ok_or(Error::DegenerateThreshold(mu))
}

/// Everything learned from the run at `mu` and its companions.
struct Assessment {
    out_of_range: bool,
    sign: Sign,
}

fn assess(
    dataset: &Dataset,
    oracle: &ThresholdOracle,
    main: &ExperimentResult,
    plan: &RunPlan,
) -> Result<Assessment> {
    let eps_hi = bracket_top(plan.eps0, plan.beta);
    let band = Band::new(main, plan);
    let probe = CoarseProbe::run(oracle, plan)?;

    // Beyond ε_hi the forward map folds over and can alias into range, so
    // the preparation-only probe both detects that case and signs it.
    let out_of_range = band.lo() > predicted_fraction(eps_hi, plan.beta)
        || probe.magnitude_floor() > eps_hi;
    if out_of_range {
        return Ok(Assessment {
            out_of_range,
            sign: probe.sign(),
        });
    }
    if band.f <= EXACT_SLACK {
        return Ok(Assessment {
            out_of_range,
            sign: Sign::Unknown,
        });
    }

    let mu_up = perturbed_threshold(dataset, oracle.mu())?;
    let nudged = make_oracle(dataset, mu_up);
    let moved = measure(
        &nudged,
        plan.beta,
        plan.alpha,
        plan.mode,
        derive_seed(plan.seed, PERTURBED_STREAM),
        plan.resimulate,
    )?;
    // raising the threshold adds mass below: |ε| grows iff ε was already positive
    Ok(Assessment {
        out_of_range,
        sign: Band::new(&moved, plan).compare(&band),
    })
}

/// Decides the sign of the imbalance at `mu`.
pub fn resolve_sign(dataset: &Dataset, mu: f64, plan: &RunPlan) -> Result<Sign> {
    let oracle = make_oracle(dataset, mu);
    let main = run_experiment(&oracle, plan)?;
    Ok(assess(dataset, &oracle, &main, plan)?.sign)
}

/// Signed estimate of the imbalance at `mu`.
pub fn eps_est(dataset: &Dataset, mu: f64, plan: &RunPlan) -> Result<EstimateRecord> {
    let oracle = make_oracle(dataset, mu);
    let main = run_experiment(&oracle, plan)?;
    let found = assess(dataset, &oracle, &main, plan)?;
    let eps_hi = bracket_top(plan.eps0, plan.beta);

    let (eps_abs, ci_lo, ci_hi, verdict) = if found.out_of_range {
        (eps_hi, eps_hi, 1.0, Verdict::EpsExceedsEps0)
    } else {
        let branch = match found.sign {
            Sign::Minus => Branch::Negative,
            _ => Branch::Positive,
        };
        let f_max = predicted_fraction(branch.signed(eps_hi), plan.beta);
        let alpha = match plan.mode {
            Mode::Exact => None,
            Mode::Sampled => Some(main.alpha),
        };
        let point = invert_fraction_on(branch, main.f_hat.min(f_max), plan.beta, eps_hi)?;
        let clamped = (main.f_hat - alpha.map_or(0.0, |a| fraction_half_width(a, plan.kappa))).min(f_max);
        let (lo, hi) = confidence_interval_on(
            branch,
            main.f_hat.min(f_max).max(clamped),
            alpha,
            plan.kappa,
            plan.beta,
            eps_hi,
        )?;
        (point, lo.min(point), hi.max(point), Verdict::InRange)
    };

    Ok(EstimateRecord {
        eps_hat: found.sign.factor().map_or(0.0, |s| s * eps_abs),
        eps_abs,
        sign: found.sign,
        ci_lo,
        ci_hi,
        verdict,
        f_hat: main.f_hat,
        exact_p: main.exact_p,
        mu,
        alpha: main.alpha,
        beta: main.beta,
        theta: plan.theta,
        kappa: plan.kappa,
        eps0: plan.eps0,
        mode: plan.mode.to_string(),
        seed: plan.seed,
        n: dataset.n(),
    })
}
