//! Dense state-vector register and the transforms the algorithm applies to it.
//!
//! Amplitudes are kept at unit total probability. Analytic formulas that use
//! the `Σ|a|² = N` convention are compared after scaling by `√N`.

pub mod dense;
mod mask;

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub use mask::Mask;

/// Default upper bound on the register width.
pub const DEFAULT_MAX_BITS: u32 = 24;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Index of a computational basis state; its binary expansion is the bit string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisIndex(usize);

impl BasisIndex {
    pub fn new(value: usize, n: u32) -> Result<Self> {
        let len = 1usize << n;
        if value >= len {
            return Err(Error::Index { index: value, len });
        }
        Ok(Self(value))
    }

    pub fn value(self) -> usize {
        self.0
    }

    /// Bit `bit` of the index, i.e. one coordinate of its bit string.
    pub fn bit(self, bit: u32) -> bool {
        (self.0 >> bit) & 1 == 1
    }
}

/// The simulated register: `2ⁿ` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: u32,
    amps: Vec<Complex64>,
}

fn check_bits(n: u32, cap: u32) -> Result<()> {
    if n == 0 || n > cap {
        return Err(Error::Size(format!(
            "register width must be in 1..={cap} bits, got {n}"
        )));
    }
    Ok(())
}

impl StateVector {
    /// Equal superposition, every amplitude `2^(-n/2)`.
    pub fn uniform(n: u32) -> Result<Self> {
        Self::uniform_with_cap(n, DEFAULT_MAX_BITS)
    }

    pub fn uniform_with_cap(n: u32, cap: u32) -> Result<Self> {
        check_bits(n, cap)?;
        Ok(Self {
            n,
            amps: vec![Complex64::new(inv_sqrt_pow2(n), 0.0); 1 << n],
        })
    }

    pub fn basis(n: u32, index: usize) -> Result<Self> {
        check_bits(n, DEFAULT_MAX_BITS)?;
        let index = BasisIndex::new(index, n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index.value()] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Wraps raw amplitudes. The length must be a power of two; the norm is not checked.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Size(format!(
                "amplitude count must be a power of two >= 2, got {len}"
            )));
        }
        let n = len.trailing_zeros();
        check_bits(n, DEFAULT_MAX_BITS)?;
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        compensated_sum(self.amps.iter().map(|a| a.norm_sqr()))
    }

    /// Arithmetic mean of the amplitudes, summed in index order so the
    /// result is reproducible bit for bit.
    fn mean(&self) -> Complex64 {
        let re = compensated_sum(self.amps.iter().map(|a| a.re));
        let im = compensated_sum(self.amps.iter().map(|a| a.im));
        Complex64::new(re, im) / self.amps.len() as f64
    }

    /// Walsh–Hadamard transform as `n` in-place butterfly passes, lowest bit first.
    ///
    /// Each pass applies the single-bit matrix `[[1, 1], [1, -1]]` across one
    /// bit position; the `2^(-n/2)` normalization is applied once at the end.
    pub fn walsh_hadamard(&mut self) {
        let len = self.amps.len();
        let mut half = 1;
        while half < len {
            for block in self.amps.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = x + y;
                    *b = x - y;
                }
            }
            half *= 2;
        }
        let scale = inv_sqrt_pow2(self.n);
        for a in &mut self.amps {
            *a *= scale;
        }
    }

    /// Multiplies the amplitudes selected by `mask` by `e^(i angle)`.
    pub fn conditional_phase(&mut self, mask: &Mask, angle: f64) -> Result<()> {
        self.check_mask(mask)?;
        let factor = phase_factor(angle);
        for index in mask.iter() {
            self.amps[index] *= factor;
        }
        Ok(())
    }

    /// Inversion about the mean: `a'ₚ = 2·mean(a) - aₚ`.
    pub fn diffusion(&mut self) {
        let twice_mean = self.mean() * 2.0;
        for a in &mut self.amps {
            *a = twice_mean - *a;
        }
    }

    /// Shift transform: `a'ₚ = (1 + i)·mean(a) - i·aₚ`.
    pub fn shift(&mut self) {
        let pull = self.mean() * Complex64::new(1.0, 1.0);
        for a in &mut self.amps {
            *a = pull - I * *a;
        }
    }

    /// Total probability carried by the indices in `mask`.
    pub fn probability_of(&self, mask: &Mask) -> Result<f64> {
        self.check_mask(mask)?;
        Ok(compensated_sum(mask.iter().map(|p| self.amps[p].norm_sqr())))
    }

    /// Draws one basis index with probability `|aₚ|²` using a single uniform.
    pub fn sample(&self, rng: &mut SplitMix64) -> Result<BasisIndex> {
        Ok(self.sampler()?.draw(rng))
    }

    /// Precomputes the cumulative distribution for repeated draws.
    pub fn sampler(&self) -> Result<Sampler> {
        Sampler::new(self)
    }

    fn check_mask(&self, mask: &Mask) -> Result<()> {
        if mask.len() != self.amps.len() {
            return Err(Error::Index {
                index: mask.len().saturating_sub(1),
                len: self.amps.len(),
            });
        }
        Ok(())
    }
}

/// Correctly rounded `2^(-n/2)`.
/// Neumaier summation: the running error term keeps the result accurate
/// to a few ulps independent of the number of terms.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

fn inv_sqrt_pow2(n: u32) -> f64 {
    let even = 0.5f64.powi((n / 2) as i32);
    if n.is_multiple_of(2) {
        even
    } else {
        even * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// `e^(i angle)`, exact for whole multiples of a quarter turn.
fn phase_factor(angle: f64) -> Complex64 {
    let quarters = angle / FRAC_PI_2;
    let nearest = quarters.round();
    if (quarters - nearest).abs() <= 4.0 * f64::EPSILON * nearest.abs().max(1.0) {
        match (nearest as i64).rem_euclid(4) {
            0 => Complex64::new(1.0, 0.0),
            1 => I,
            2 => Complex64::new(-1.0, 0.0),
            _ => -I,
        }
    } else {
        Complex64::from_polar(1.0, angle)
    }
}

/// Inverse-CDF sampler over a fixed state.
#[derive(Debug, Clone)]
pub struct Sampler {
    cumulative: Vec<f64>,
    last_nonzero: usize,
}

impl Sampler {
    fn new(state: &StateVector) -> Result<Self> {
        let mut cumulative = Vec::with_capacity(state.len());
        let mut acc = 0.0;
        let mut last_nonzero = None;
        for (p, a) in state.amps.iter().enumerate() {
            let w = a.norm_sqr();
            if w > 0.0 {
                last_nonzero = Some(p);
            }
            acc += w;
            cumulative.push(acc);
        }
        if !acc.is_finite() {
            return Err(Error::Numerical("non-finite amplitudes".into()));
        }
        let last_nonzero =
            last_nonzero.ok_or_else(|| Error::Numerical("cannot sample an all-zero state".into()))?;
        Ok(Self {
            cumulative,
            last_nonzero,
        })
    }

    /// First index whose cumulative probability strictly exceeds `u`.
    pub fn locate(&self, u: f64) -> BasisIndex {
        let p = self.cumulative.partition_point(|&c| c <= u);
        BasisIndex(p.min(self.last_nonzero))
    }

    pub fn draw(&self, rng: &mut SplitMix64) -> BasisIndex {
        self.locate(rng.next_f64())
    }
}
