//! Explicit 2ⁿ×2ⁿ matrices for cross-checking the streaming transforms.
//!
//! Only meant for small registers; construction is capped at
//! [`MAX_DENSE_BITS`] bits.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_DENSE_BITS: u32 = 6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Row-major square complex matrix of dimension 2ⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: u32,
    dim: usize,
    entries: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn from_fn(n: u32, f: impl Fn(usize, usize) -> Complex64) -> Result<Self> {
        if n == 0 || n > MAX_DENSE_BITS {
            return Err(Error::Size(format!(
                "dense matrices support 1..={MAX_DENSE_BITS} bits, got {n}"
            )));
        }
        let dim = 1usize << n;
        let mut entries = Vec::with_capacity(dim * dim);
        for row in 0..dim {
            for col in 0..dim {
                entries.push(f(row, col));
            }
        }
        Ok(Self { n, dim, entries })
    }

    pub fn identity(n: u32) -> Result<Self> {
        Self::from_fn(n, |p, q| if p == q { ONE } else { ZERO })
    }

    /// `F_pq = 2^(-n/2) (-1)^(p·q)` with `p·q` the bitwise dot product.
    pub fn walsh_hadamard(n: u32) -> Result<Self> {
        let scale = (0.5f64).powf(n as f64 / 2.0);
        Self::from_fn(n, |p, q| {
            let sign = if (p & q).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(sign * scale, 0.0)
        })
    }

    /// `D_pq = 2/N` off the diagonal, `-1 + 2/N` on it.
    pub fn diffusion(n: u32) -> Result<Self> {
        let big_n = (1usize << n) as f64;
        Self::from_fn(n, |p, q| {
            let off = 2.0 / big_n;
            Complex64::new(if p == q { off - 1.0 } else { off }, 0.0)
        })
    }

    /// `S_pq = (1 + i)/N` off the diagonal, `1/N - i(N-1)/N` on it.
    pub fn shift(n: u32) -> Result<Self> {
        let big_n = (1usize << n) as f64;
        Self::from_fn(n, |p, q| {
            if p == q {
                Complex64::new(1.0 / big_n, -(big_n - 1.0) / big_n)
            } else {
                Complex64::new(1.0 / big_n, 1.0 / big_n)
            }
        })
    }

    /// `T = diag(1, -1, …, -1)`, the phase flip conjugated into `D` by `F`.
    pub fn zero_reflection(n: u32) -> Result<Self> {
        Self::from_fn(n, |p, q| match (p == q, p) {
            (false, _) => ZERO,
            (true, 0) => ONE,
            (true, _) => -ONE,
        })
    }

    /// `R = diag(1, -i, …, -i)`, conjugated into `S` by `F`.
    pub fn zero_quarter_turn(n: u32) -> Result<Self> {
        Self::from_fn(n, |p, q| match (p == q, p) {
            (false, _) => ZERO,
            (true, 0) => ONE,
            (true, _) => -I,
        })
    }

    /// Diagonal matrix multiplying the masked indices by `e^(i angle)`.
    pub fn phase(n: u32, selected: impl Fn(usize) -> bool, angle: f64) -> Result<Self> {
        let factor = Complex64::from_polar(1.0, angle);
        Self::from_fn(n, |p, q| match (p == q, selected(p)) {
            (false, _) => ZERO,
            (true, true) => factor,
            (true, false) => ONE,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn mul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let dim = self.dim;
        let mut entries = vec![ZERO; dim * dim];
        for row in 0..dim {
            for k in 0..dim {
                let a = self.entries[row * dim + k];
                if a == ZERO {
                    continue;
                }
                for col in 0..dim {
                    entries[row * dim + col] += a * rhs.entries[k * dim + col];
                }
            }
        }
        DenseMatrix {
            n: self.n,
            dim,
            entries,
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim, "dimension mismatch");
        (0..self.dim)
            .map(|row| {
                self.entries[row * self.dim..(row + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, x)| a * x)
                    .sum()
            })
            .collect()
    }

    pub fn conjugate_transpose(&self) -> DenseMatrix {
        let dim = self.dim;
        let mut entries = vec![ZERO; dim * dim];
        for row in 0..dim {
            for col in 0..dim {
                entries[col * dim + row] = self.entries[row * dim + col].conj();
            }
        }
        DenseMatrix {
            n: self.n,
            dim,
            entries,
        }
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|U†U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let product = self.conjugate_transpose().mul(self);
        let identity = DenseMatrix::identity(self.n).expect("same size as self");
        product.max_abs_diff(&identity)
    }
}
