//! Closed-form evolution of the two representative amplitudes.
//!
//! Every below-threshold state shares one amplitude `k` and every
//! above-threshold state shares `l`, so the whole register reduces to a
//! complex pair. Amplitudes here follow the `Σ|a|² = N` convention: divide by
//! `√N` to compare with a unit-norm [`StateVector`](crate::StateVector).

use num_complex::Complex64;

/// The `(k, l)` pair together with the imbalance it evolves under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoAmpState {
    pub k: Complex64,
    pub l: Complex64,
    pub eps: f64,
}

impl TwoAmpState {
    pub fn new(k: Complex64, l: Complex64, eps: f64) -> Self {
        Self { k, l, eps }
    }

    /// Amplitudes right after preparation: `k = ε`, `l = (1 + ε) + i`.
    pub fn post_shift(eps: f64) -> Self {
        Self {
            k: Complex64::new(eps, 0.0),
            l: Complex64::new(1.0 + eps, 1.0),
            eps,
        }
    }

    /// Inversion about the mean restricted to the pair.
    pub fn diffusion_pair(self) -> Self {
        let e = self.eps;
        Self {
            k: self.k * e + self.l * (1.0 - e),
            l: self.k * (1.0 + e) - self.l * e,
            eps: e,
        }
    }

    /// One full amplification iteration: flip below, diffuse, flip above, diffuse.
    pub fn loop_step(self) -> Self {
        let e = self.eps;
        let e2 = e * e;
        Self {
            k: self.k * (1.0 - 2.0 * e2) + self.l * (2.0 * e - 2.0 * e2),
            l: -self.k * (2.0 * e + 2.0 * e2) + self.l * (1.0 - 2.0 * e2),
            eps: e,
        }
    }

    /// `(1 + ε)|k|² + (1 - ε)|l|²`, invariant under both maps above.
    pub fn conserved_quantity(&self) -> f64 {
        (1.0 + self.eps) * self.k.norm_sqr() + (1.0 - self.eps) * self.l.norm_sqr()
    }

    /// Probability of observing a below-threshold state.
    pub fn below_probability(&self) -> f64 {
        0.5 * (1.0 + self.eps) * self.k.norm_sqr()
    }
}

/// Rotation angle and amplitude ratio of the loop's transfer matrix.
///
/// `φ` carries the sign of `ε`, so `γ·sin φ = 2ε - 2ε²` for either sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopAngles {
    pub phi: f64,
    pub gamma: f64,
}

impl LoopAngles {
    pub fn new(eps: f64) -> Self {
        // cos φ = 1 - 2ε² ⇔ sin(φ/2) = |ε|; asin stays accurate near ε = 0
        let phi = 2.0 * eps.abs().min(1.0).asin() * eps.signum();
        let phi = if eps == 0.0 { 0.0 } else { phi };
        let gamma = if eps == 0.0 {
            1.0
        } else {
            ((1.0 - eps) / (1.0 + eps)).sqrt()
        };
        Self { phi, gamma }
    }

    /// For a real pair `(k₀, l₀)` returns `(A, τ)` with `k₀ = Aγ sin τ`, `l₀ = A cos τ`.
    ///
    /// The pair then evolves as `k_r = Aγ sin(τ + rφ)`, `l_r = A cos(τ + rφ)`.
    /// `None` when `γ` is zero or infinite (`|ε| = 1`).
    pub fn phase_offset(&self, k0: f64, l0: f64) -> Option<(f64, f64)> {
        if self.gamma == 0.0 || !self.gamma.is_finite() {
            return None;
        }
        let s = k0 / self.gamma;
        Some((s.hypot(l0), s.atan2(l0)))
    }
}

/// `sin(rφ) / sin φ`, continued through its limits where `sin φ` vanishes.
fn sin_ratio(r: u64, phi: f64) -> f64 {
    let s = phi.sin();
    if s.abs() > 1e-6 {
        return (r as f64 * phi).sin() / s;
    }
    // Chebyshev U_{r-1}(cos φ)
    if r == 0 {
        return 0.0;
    }
    let x = phi.cos();
    let (mut prev, mut cur) = (0.0, 1.0);
    for _ in 1..r {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `k_r = γ(1 + ε + i) sin(rφ) + ε cos(rφ)` starting from [`TwoAmpState::post_shift`].
pub fn k_closed_form(eps: f64, r: u64) -> Complex64 {
    let angles = LoopAngles::new(eps);
    let ratio = sin_ratio(r, angles.phi);
    // γ sin(rφ) = 2ε(1 - ε) · sin(rφ)/sin φ
    let coef = 2.0 * eps * (1.0 - eps) * ratio;
    Complex64::new(1.0 + eps, 1.0) * coef + eps * (r as f64 * angles.phi).cos()
}

/// Companion `l_r = (1 + ε + i) cos(rφ) - (ε/γ) sin(rφ)`.
pub fn l_closed_form(eps: f64, r: u64) -> Complex64 {
    let angles = LoopAngles::new(eps);
    let ratio = sin_ratio(r, angles.phi);
    // (ε/γ) sin(rφ) = 2ε²(1 + ε) · sin(rφ)/sin φ
    let coef = 2.0 * eps * eps * (1.0 + eps) * ratio;
    Complex64::new(1.0 + eps, 1.0) * (r as f64 * angles.phi).cos() - coef
}

/// Small-angle growth `|k_r| ≈ 2√2·r·ε`.
pub fn k_small_eps_approx(eps: f64, r: u64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * r as f64 * eps
}

/// Below-threshold probability after `beta` loop iterations: `½(1 + ε)|k_β|²`.
pub fn predicted_fraction(eps: f64, beta: u64) -> f64 {
    0.5 * (1.0 + eps) * k_closed_form(eps, beta).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn iterate(eps: f64, r: u64) -> TwoAmpState {
        let mut s = TwoAmpState::post_shift(eps);
        for _ in 0..r {
            s = s.loop_step();
        }
        s
    }

    #[test]
    fn post_shift_examples() {
        let s = TwoAmpState::post_shift(0.0);
        assert_eq!((s.k, s.l), (c(0.0, 0.0), c(1.0, 1.0)));
        let s = TwoAmpState::post_shift(0.125);
        assert_eq!((s.k, s.l), (c(0.125, 0.0), c(1.125, 1.0)));
        for eps in [-0.5, 0.2, 0.125] {
            assert_abs_diff_eq!(
                TwoAmpState::post_shift(eps).conserved_quantity(),
                2.0,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn diffusion_pair_examples() {
        for eps in [-0.3, 0.0, 0.125, 0.7] {
            let s = TwoAmpState::new(c(1.0, 0.0), c(0.0, 0.0), eps).diffusion_pair();
            assert_eq!((s.k, s.l), (c(eps, 0.0), c(1.0 + eps, 0.0)));
            let s = TwoAmpState::new(c(0.0, 0.0), c(1.0, 0.0), eps).diffusion_pair();
            assert_eq!((s.k, s.l), (c(1.0 - eps, 0.0), c(-eps, 0.0)));
            let s = TwoAmpState::new(c(1.0, 0.0), c(1.0, 0.0), eps).diffusion_pair();
            assert_abs_diff_eq!((s.k - 1.0).norm(), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!((s.l - 1.0).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn loop_step_examples() {
        let s = TwoAmpState::new(c(1.0, 0.0), c(0.0, 0.0), 0.1).loop_step();
        assert_abs_diff_eq!(s.k.re, 0.98, epsilon = 1e-15);
        assert_abs_diff_eq!(s.l.re, -0.22, epsilon = 1e-15);

        let start = TwoAmpState::new(c(0.3, -1.0), c(2.0, 0.5), 0.0);
        assert_eq!(start.loop_step(), start);

        // 2×2 complex product worked by hand: k₁ = 47/128 + 7/32 i, l₁ = 135/128 + 31/32 i
        let s = TwoAmpState::post_shift(0.125).loop_step();
        assert_eq!(s.k, c(0.3671875, 0.21875));
        assert_eq!(s.l, c(1.0546875, 0.96875));
        assert_eq!(s.conserved_quantity(), 2.0);
    }

    #[test]
    fn loop_step_is_two_diffusions_with_flips() {
        let eps = 0.37;
        let s = TwoAmpState::new(c(0.2, 0.1), c(-0.4, 0.9), eps);
        let mut t = TwoAmpState { k: -s.k, ..s }.diffusion_pair();
        t.l = -t.l;
        let t = t.diffusion_pair();
        let direct = s.loop_step();
        assert_abs_diff_eq!((t.k - direct.k).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((t.l - direct.l).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn basis_transfer_columns() {
        for eps in [-0.2, 0.05, 0.3] {
            let e2 = eps * eps;
            let a = TwoAmpState::new(c(1.0, 0.0), c(0.0, 0.0), eps).loop_step();
            assert_abs_diff_eq!(a.k.re, 1.0 - 2.0 * e2, epsilon = 1e-15);
            assert_abs_diff_eq!(a.l.re, -2.0 * eps - 2.0 * e2, epsilon = 1e-15);
            let b = TwoAmpState::new(c(0.0, 0.0), c(1.0, 0.0), eps).loop_step();
            assert_abs_diff_eq!(b.k.re, 2.0 * eps - 2.0 * e2, epsilon = 1e-15);
            assert_abs_diff_eq!(b.l.re, 1.0 - 2.0 * e2, epsilon = 1e-15);
        }
    }

    #[test]
    fn angle_identities() {
        for eps in [-0.9, -0.25, -0.001, 0.001, 0.1, 0.5, 0.99] {
            let a = LoopAngles::new(eps);
            assert_abs_diff_eq!(a.gamma * a.phi.sin(), 2.0 * eps - 2.0 * eps * eps, epsilon = 1e-14);
            assert_abs_diff_eq!(a.phi.cos(), 1.0 - 2.0 * eps * eps, epsilon = 1e-15);
            assert_abs_diff_eq!(
                a.gamma * a.gamma,
                (2.0 * eps - 2.0 * eps * eps) / (2.0 * eps + 2.0 * eps * eps),
                epsilon = 1e-13
            );
        }
        assert_eq!(LoopAngles::new(0.0), LoopAngles { phi: 0.0, gamma: 1.0 });
    }

    #[test]
    fn phase_offset_parametrizes_real_orbits() {
        let eps = 0.07;
        let angles = LoopAngles::new(eps);
        let (amp, tau) = angles.phase_offset(1.0, 0.0).unwrap();
        let mut s = TwoAmpState::new(c(1.0, 0.0), c(0.0, 0.0), eps);
        for r in 0..40 {
            let theta = tau + r as f64 * angles.phi;
            assert_abs_diff_eq!(s.k.re, amp * angles.gamma * theta.sin(), epsilon = 1e-12);
            assert_abs_diff_eq!(s.l.re, amp * theta.cos(), epsilon = 1e-12);
            s = s.loop_step();
        }
        assert!(LoopAngles::new(1.0).phase_offset(1.0, 0.0).is_none());
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(k_closed_form(0.3, 0), c(0.3, 0.0));
        let k1 = k_closed_form(0.125, 1);
        assert_abs_diff_eq!((k1 - c(0.3671875, 0.21875)).norm(), 0.0, epsilon = 1e-14);
        let k50 = k_closed_form(0.001, 50).norm();
        let approx = 2.0 * 2f64.sqrt() * 50.0 * 0.001;
        assert!(k50 >= 0.97 * approx && k50 <= 1.07 * approx);
    }

    #[test]
    fn closed_form_at_extremes_matches_recurrence() {
        for eps in [-1.0, 1.0, 1e-12, -1e-12] {
            for r in 0..20 {
                let s = iterate(eps, r);
                assert_abs_diff_eq!((k_closed_form(eps, r) - s.k).norm(), 0.0, epsilon = 1e-12);
                assert_abs_diff_eq!((l_closed_form(eps, r) - s.l).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn small_eps_approx_examples() {
        assert_eq!(k_small_eps_approx(0.001, 50), 0.1414213562373095);
        assert_eq!(k_small_eps_approx(0.4, 0), 0.0);
        let ratio = k_closed_form(0.001, 10).norm() / k_small_eps_approx(0.001, 10);
        assert!((0.97..=1.07).contains(&ratio), "{ratio}");
    }

    #[test]
    fn predicted_fraction_examples() {
        for beta in [0, 1, 7, 100] {
            assert_eq!(predicted_fraction(0.0, beta), 0.0);
        }
        // exact rational 26937/262144
        assert_abs_diff_eq!(predicted_fraction(0.125, 1), 0.10275650024414063, epsilon = 1e-16);
        assert_abs_diff_eq!(predicted_fraction(0.2, 0), 0.024, epsilon = 1e-16);
    }

    #[test]
    fn conserved_quantity_examples() {
        for eps in [0.0, 0.125, -0.125, 0.0625, -0.0625] {
            assert_abs_diff_eq!(
                TwoAmpState::post_shift(eps).conserved_quantity(),
                2.0,
                epsilon = 1e-15
            );
        }
        assert_eq!(TwoAmpState::new(c(1.0, 0.0), c(0.0, 1.0), 0.4).conserved_quantity(), 2.0);
        let mut s = TwoAmpState::post_shift(0.0625);
        for _ in 0..1000 {
            s = s.loop_step();
            assert_abs_diff_eq!(s.conserved_quantity(), 2.0, epsilon = 1e-13);
        }
    }
}
