//! Numerical verification suite for the transforms and the two-amplitude model.
//!
//! Each entry measures the worst deviation observed for one identity; the
//! suite passes when every deviation is strictly below the tolerance.

use num_complex::Complex64;

use crate::analytic::{k_closed_form, l_closed_form, LoopAngles, TwoAmpState};
use crate::dataset::ThresholdOracle;
use crate::driver::{amplification_loop, prepare};
use crate::error::Result;
use crate::rng::SplitMix64;
use crate::statevector::dense::{DenseMatrix, MAX_DENSE_BITS};
use crate::statevector::{Mask, StateVector, DEFAULT_MAX_BITS};
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub name: &'static str,
    /// Register width the check ran at.
    pub n: u32,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.entries.iter().all(|e| e.max_error < tol)
    }

    fn push(&mut self, name: &'static str, n: u32, max_error: f64) {
        self.entries.push(CheckEntry { name, n, max_error });
    }
}

/// Random unit-norm state with components drawn from `[-1, 1)`.
pub fn random_state(n: u32, rng: &mut SplitMix64) -> Result<StateVector> {
    let len = 1usize << n;
    let mut amps: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(2.0 * rng.next_f64() - 1.0, 2.0 * rng.next_f64() - 1.0))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    StateVector::from_amplitudes(amps)
}

/// Oracle whose first `n_below` indices lie below the threshold.
pub fn prefix_oracle(n: u32, n_below: usize) -> Result<ThresholdOracle> {
    ThresholdOracle::from_mask(0.0, Mask::from_indices(1 << n, 0..n_below)?)
}

/// Achievable imbalances `2j/N - 1` with `|ε| ≤ bound`.
pub fn eps_grid(n: u32, bound: f64) -> Vec<(usize, f64)> {
    let len = 1usize << n;
    (0..=len)
        .map(|nb| (nb, (2.0 * nb as f64 - len as f64) / len as f64))
        .filter(|(_, e)| e.abs() <= bound)
        .collect()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest spread among amplitudes inside `mask`, and the first such amplitude.
pub fn flatness(state: &StateVector, mask: &Mask) -> (f64, Option<Complex64>) {
    let amps = state.amplitudes();
    let mut iter = mask.iter();
    let Some(first) = iter.next().map(|p| amps[p]) else {
        return (0.0, None);
    };
    let spread = iter.map(|p| (amps[p] - first).norm()).fold(0.0, f64::max);
    (spread, Some(first))
}

/// Runs every check at width `n`.
pub fn run_checks(n: u32, seed: u64) -> Result<CheckReport> {
    if n == 0 || n > DEFAULT_MAX_BITS {
        return Err(Error::Size(format!(
            "check width must be in 1..={DEFAULT_MAX_BITS} bits, got {n}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut report = CheckReport::default();
    let states = if n <= 12 { 20 } else { 2 };

    // unitarity and involution of the streaming transforms
    let mut norm_change = 0.0f64;
    let mut involution = 0.0f64;
    let mask = Mask::from_predicate(1 << n, |p| p % 3 == 0);
    for _ in 0..states {
        let x = random_state(n, &mut rng)?;
        let before = x.norm_sqr();
        let mut f = x.clone();
        f.walsh_hadamard();
        norm_change = norm_change.max((f.norm_sqr() - before).abs());
        f.walsh_hadamard();
        involution = involution.max(max_diff(f.amplitudes(), x.amplitudes()));
        let mut d = x.clone();
        d.diffusion();
        norm_change = norm_change.max((d.norm_sqr() - before).abs());
        let mut s = x.clone();
        s.shift();
        norm_change = norm_change.max((s.norm_sqr() - before).abs());
        let mut p = x.clone();
        p.conditional_phase(&mask, 0.7)?;
        norm_change = norm_change.max((p.norm_sqr() - before).abs());
    }
    report.push("unitarity (F, D, S, phase)", n, norm_change);
    report.push("F involution", n, involution);

    // factorizations through the dense oracle
    let m = n.min(MAX_DENSE_BITS);
    let f = DenseMatrix::walsh_hadamard(m)?;
    let ftf = f.mul(&DenseMatrix::zero_reflection(m)?).mul(&f);
    report.push("FTF = D", m, ftf.max_abs_diff(&DenseMatrix::diffusion(m)?));
    let frf = f.mul(&DenseMatrix::zero_quarter_turn(m)?).mul(&f);
    report.push("FRF = S", m, frf.max_abs_diff(&DenseMatrix::shift(m)?));
    let mut streaming = 0.0f64;
    for _ in 0..4 {
        let x = random_state(m, &mut rng)?;
        let mut a = x.clone();
        a.walsh_hadamard();
        streaming = streaming.max(max_diff(a.amplitudes(), &f.apply(x.amplitudes())));
        let mut a = x.clone();
        a.diffusion();
        streaming = streaming.max(max_diff(a.amplitudes(), &DenseMatrix::diffusion(m)?.apply(x.amplitudes())));
        let mut a = x.clone();
        a.shift();
        streaming = streaming.max(max_diff(a.amplitudes(), &DenseMatrix::shift(m)?.apply(x.amplitudes())));
    }
    report.push("streaming = dense", m, streaming);

    // preparation amplitudes and flatness
    let scale = ((1usize << n) as f64).sqrt();
    let mut prep = 0.0f64;
    let mut flat = 0.0f64;
    let grid = eps_grid(n, 0.25);
    let stride = (grid.len() / 64).max(1);
    for &(nb, eps) in grid.iter().step_by(stride) {
        let oracle = prefix_oracle(n, nb)?;
        let state = prepare(&oracle)?;
        let (spread_b, k) = flatness(&state, oracle.below_mask());
        let (spread_a, l) = flatness(&state, &oracle.above_mask());
        flat = flat.max(spread_b).max(spread_a);
        if let Some(k) = k {
            prep = prep.max((k * scale - Complex64::new(eps, 0.0)).norm());
        }
        if let Some(l) = l {
            prep = prep.max((l * scale - Complex64::new(1.0 + eps, 1.0)).norm());
        }
    }
    report.push("preparation amplitudes", n, prep);
    report.push("flatness", n, flat);

    // conservation along the loop, analytic and simulated
    let mut conservation = 0.0f64;
    for eps in [-0.25, -0.0625, 0.0, 0.0625, 0.125, 0.25] {
        let mut s = TwoAmpState::post_shift(eps);
        for _ in 0..1000 {
            s = s.loop_step();
            conservation = conservation.max((s.conserved_quantity() - 2.0).abs());
        }
    }
    report.push("conserved quantity", n, conservation);

    // transfer-matrix columns
    let mut columns = 0.0f64;
    for eps in [-0.3, 0.01, 0.2] {
        let e2 = eps * eps;
        let a = TwoAmpState::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), eps).loop_step();
        let b = TwoAmpState::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), eps).loop_step();
        columns = columns
            .max((a.k - (1.0 - 2.0 * e2)).norm())
            .max((a.l + 2.0 * eps + 2.0 * e2).norm())
            .max((b.k - (2.0 * eps - 2.0 * e2)).norm())
            .max((b.l - (1.0 - 2.0 * e2)).norm());
        let angles = LoopAngles::new(eps);
        columns = columns.max((angles.gamma * angles.phi.sin() - (2.0 * eps - 2.0 * e2)).abs());
    }
    report.push("loop transfer matrix", n, columns);

    // simulator against closed form
    let &(nb, eps) = grid
        .iter()
        .min_by(|a, b| (a.1 - 0.125).abs().total_cmp(&(b.1 - 0.125).abs()))
        .expect("grid contains eps = 0");
    let oracle = prefix_oracle(n, nb)?;
    let mut state = prepare(&oracle)?;
    let mut closed = 0.0f64;
    for r in 0..=100u64 {
        if r > 0 {
            amplification_loop(&mut state, &oracle, 1)?;
        }
        if let (_, Some(k)) = flatness(&state, oracle.below_mask()) {
            closed = closed.max((k * scale - k_closed_form(eps, r)).norm());
        }
        if let (_, Some(l)) = flatness(&state, &oracle.above_mask()) {
            closed = closed.max((l * scale - l_closed_form(eps, r)).norm());
        }
    }
    report.push("simulator = closed form", n, closed);

    Ok(report)
}
