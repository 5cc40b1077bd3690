//! Datasets of `2ⁿ` values and the threshold oracle that partitions them.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::statevector::{Mask, DEFAULT_MAX_BITS};

/// One finite value per basis state; `values[p]` belongs to state `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: u32,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Size(format!(
                "dataset must hold a power-of-two count >= 2 of values, got {len}"
            )));
        }
        let n = len.trailing_zeros();
        if n > DEFAULT_MAX_BITS {
            return Err(Error::Size(format!(
                "dataset of 2^{n} values exceeds the {DEFAULT_MAX_BITS}-bit register cap"
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line: p + 1,
                text: values[p].to_string(),
            });
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Count of values strictly below `mu`.
    pub fn rank_below(&self, mu: f64) -> usize {
        self.values.iter().filter(|&&v| v < mu).count()
    }

    /// Smallest value that is `>= mu`, if any.
    pub fn first_at_or_above(&self, mu: f64) -> Option<f64> {
        self.values
            .iter()
            .copied()
            .filter(|&v| v >= mu)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
    }
}

/// Parses newline-delimited decimals; the count must be a power of two.
pub fn load_dataset(text: &str) -> Result<Dataset> {
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let value: f64 = line.parse().map_err(|_| Error::Parse {
            line: i + 1,
            text: raw.to_string(),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line: i + 1,
                text: raw.to_string(),
            });
        }
        values.push(value);
    }
    Dataset::new(values)
}

/// Serializes a dataset in the line format read by [`load_dataset`].
pub fn format_dataset(dataset: &Dataset) -> String {
    let mut out = String::with_capacity(dataset.len() * 20);
    for v in dataset.values() {
        out.push_str(&format!("{v:?}\n"));
    }
    out
}

/// The partition of a dataset at threshold `mu`.
///
/// Values equal to `mu` count as above, so `n_below + n_above = N` always.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdOracle {
    n: u32,
    mu: f64,
    below: Mask,
    n_below: usize,
}

impl ThresholdOracle {
    /// Oracle that marks exactly the indices in `below`.
    pub fn from_mask(mu: f64, below: Mask) -> Result<Self> {
        let len = below.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Size(format!(
                "mask length must be a power of two >= 2, got {len}"
            )));
        }
        let n_below = below.count();
        Ok(Self {
            n: len.trailing_zeros(),
            mu,
            below,
            n_below,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn below_mask(&self) -> &Mask {
        &self.below
    }

    pub fn above_mask(&self) -> Mask {
        self.below.complement()
    }

    pub fn n_below(&self) -> usize {
        self.n_below
    }

    pub fn n_above(&self) -> usize {
        self.len() - self.n_below
    }

    /// `(N_b - N_a) / N`. Exact, since `N` is a power of two.
    pub fn eps(&self) -> f64 {
        (self.n_below as f64 - self.n_above() as f64) / self.len() as f64
    }

    /// Oracle with the roles of the two sides swapped; its imbalance is `-eps`.
    pub fn mirrored(&self) -> Self {
        Self {
            n: self.n,
            mu: self.mu,
            below: self.below.complement(),
            n_below: self.n_above(),
        }
    }
}

pub fn make_oracle(dataset: &Dataset, mu: f64) -> ThresholdOracle {
    let values = dataset.values();
    let below = Mask::from_predicate(values.len(), |p| values[p] < mu);
    let n_below = below.count();
    ThresholdOracle {
        n: dataset.n(),
        mu,
        below,
        n_below,
    }
}

/// A generated dataset together with the imbalance it realizes.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub dataset: Dataset,
    pub achieved_eps: f64,
}

/// Generates `2ⁿ` values of which `round(N(1+eps)/2)` lie strictly below `mu`.
///
/// Below-values are drawn from `(mu - 1, mu)`, the rest from `[mu, mu + 1)`,
/// and positions are shuffled with the seeded stream.
pub fn synth_dataset(n: u32, eps_target: f64, mu: f64, seed: u64) -> Result<SynthDataset> {
    if !(-1.0..=1.0).contains(&eps_target) {
        return Err(Error::Parameter(format!(
            "target imbalance must lie in [-1, 1], got {eps_target}"
        )));
    }
    if !mu.is_finite() {
        return Err(Error::Parameter(format!("threshold must be finite, got {mu}")));
    }
    if n == 0 || n > DEFAULT_MAX_BITS {
        return Err(Error::Size(format!(
            "register width must be in 1..={DEFAULT_MAX_BITS} bits, got {n}"
        )));
    }
    let len = 1usize << n;
    let n_below = ((len as f64) * (1.0 + eps_target) / 2.0).round() as usize;
    let mut rng = SplitMix64::new(seed);

    let mut values = Vec::with_capacity(len);
    for _ in 0..n_below {
        // 1 - u lies in (0, 1]
        let mut v = mu - (1.0 - rng.next_f64());
        if v >= mu {
            v = mu.next_down();
        }
        values.push(v);
    }
    for _ in n_below..len {
        let mut v = mu + rng.next_f64();
        if v < mu {
            v = mu;
        }
        values.push(v);
    }
    // Fisher–Yates
    for i in (1..len).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        values.swap(i, j);
    }

    let achieved_eps = (2.0 * n_below as f64 - len as f64) / len as f64;
    Ok(SynthDataset {
        dataset: Dataset::new(values)?,
        achieved_eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(len: usize) -> Dataset {
        Dataset::new((0..len).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn load_examples() {
        assert_eq!(load_dataset("1\n2\n3\n4\n").unwrap().n(), 2);
        assert!(matches!(load_dataset("1\n2\n3\n"), Err(Error::Size(_))));
        assert_eq!(
            load_dataset("1\nx\n3\n4\n"),
            Err(Error::Parse {
                line: 2,
                text: "x".into()
            })
        );
        assert!(matches!(load_dataset(""), Err(Error::Size(_))));
        assert!(matches!(load_dataset("1\nNaN\n"), Err(Error::Parse { .. })));
        assert!(matches!(load_dataset("1\n\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn format_round_trips() {
        let d = Dataset::new(vec![0.1, -2.5, 1e300, 3.0]).unwrap();
        assert_eq!(load_dataset(&format_dataset(&d)).unwrap(), d);
    }

    #[test]
    fn oracle_examples() {
        let d = ramp(32);
        let o = make_oracle(&d, 16.0);
        assert_eq!((o.n_below(), o.eps()), (16, 0.0));
        let o = make_oracle(&d, 16.5);
        assert_eq!((o.n_below(), o.eps()), (17, 0.0625));
        let o = make_oracle(&d, -1.0);
        assert_eq!((o.n_below(), o.eps()), (0, -1.0));
    }

    #[test]
    fn ties_count_as_above() {
        let d = Dataset::new(vec![1.0, 2.0, 2.0, 3.0]).unwrap();
        let o = make_oracle(&d, 2.0);
        assert_eq!((o.n_below(), o.n_above()), (1, 3));
    }

    #[test]
    fn mirrored_negates_eps() {
        let o = make_oracle(&ramp(32), 20.0);
        let m = o.mirrored();
        assert_eq!(m.eps(), -o.eps());
        assert_eq!(m.n_below(), o.n_above());
        assert_eq!(m.below_mask(), &o.above_mask());
    }

    #[test]
    fn synth_examples() {
        let s = synth_dataset(5, 0.125, 0.5, 1).unwrap();
        assert_eq!(s.achieved_eps, 0.125);
        assert_eq!(s.dataset.rank_below(0.5), 18);

        let s = synth_dataset(6, 0.0, 3.0, 2).unwrap();
        assert_eq!((s.achieved_eps, s.dataset.rank_below(3.0)), (0.0, 32));

        let s = synth_dataset(4, 1.0, -7.0, 3).unwrap();
        assert_eq!((s.achieved_eps, s.dataset.rank_below(-7.0)), (1.0, 16));
        assert!(s.dataset.values().iter().all(|&v| v > -8.0 && v < -7.0));
    }

    #[test]
    fn synth_rejects_bad_target() {
        assert!(matches!(synth_dataset(4, 1.5, 0.0, 0), Err(Error::Parameter(_))));
        assert!(matches!(synth_dataset(0, 0.0, 0.0, 0), Err(Error::Size(_))));
    }

    #[test]
    fn synth_is_seed_deterministic() {
        let a = synth_dataset(8, -0.3, 1.0, 9).unwrap();
        let b = synth_dataset(8, -0.3, 1.0, 9).unwrap();
        let c = synth_dataset(8, -0.3, 1.0, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn first_at_or_above_picks_smallest() {
        let d = ramp(8);
        assert_eq!(d.first_at_or_above(2.5), Some(3.0));
        assert_eq!(d.first_at_or_above(3.0), Some(3.0));
        assert_eq!(d.first_at_or_above(7.5), None);
    }
}
