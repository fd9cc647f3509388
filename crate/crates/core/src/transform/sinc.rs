//! Normalized sinc coefficients of the fractional-power series.
//!
//! For a unit-modulus eigenvalue `e^{jθ}` with `|θ| < π`,
//! `e^{jαθ} = Σ_n sinc(α − n) e^{jnθ}`; truncating to `|n| ≤ L` gives the
//! fast operator.

use std::f64::consts::PI;

use crate::c64;

/// Below this `|x|` the Taylor expansions are used instead of the quotient forms.
pub const SERIES_CUTOFF: f64 = 1e-6;

/// `(sin(πx), cos(πx))` with exact zeros at integers and half-integers.
fn sin_cos_pi(x: f64) -> (f64, f64) {
    // x = q/2 + r with |r| ≤ 1/4; both the split and the subtraction are exact
    let q = (2.0 * x).round();
    let r = x - 0.5 * q;
    let (s, c) = (PI * r).sin_cos();
    match (q as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// Normalized sinc `sin(πx)/(πx)`; exactly even and exactly 0 at nonzero integers.
pub fn sinc(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_CUTOFF {
        let px = PI * x;
        1.0 - px * px / 6.0
    } else {
        sin_cos_pi(x).0 / (PI * x)
    }
}

/// Derivative of [`sinc`]; exactly odd.
pub fn sinc_prime(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let pi2 = PI * PI;
        -pi2 * x / 3.0 + pi2 * pi2 * x * x * x / 30.0
    } else {
        let a = x.abs();
        let (_, c) = sin_cos_pi(a);
        let d = (c - sinc(a)) / a;
        if x < 0.0 {
            -d
        } else {
            d
        }
    }
}

/// Coefficients `c_n(α)` and derivatives `c'_n(α)` for `n = −L..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SincCoeffs {
    pub alpha: f64,
    pub l: usize,
    /// `c[n + L] = c_n(α)`
    pub c: Vec<f64>,
    /// `dc[n + L] = c'_n(α)`
    pub dc: Vec<f64>,
}

impl SincCoeffs {
    pub fn c(&self, n: isize) -> f64 {
        self.c[(n + self.l as isize) as usize]
    }

    pub fn dc(&self, n: isize) -> f64 {
        self.dc[(n + self.l as isize) as usize]
    }

    /// `Σ_{|n|≤L} c_n(α) e^{jnθ}`, the truncated series at one eigenphase.
    pub fn series(&self, theta: f64) -> c64 {
        series_sum(&self.c, self.l, theta)
    }

    /// `Σ_{|n|≤L} c'_n(α) e^{jnθ}`.
    pub fn series_derivative(&self, theta: f64) -> c64 {
        series_sum(&self.dc, self.l, theta)
    }

    /// `|e^{jαθ} − Σ_{|n|≤L} c_n(α) e^{jnθ}|`.
    pub fn truncation_error(&self, theta: f64) -> f64 {
        (c64::cis(self.alpha * theta) - self.series(theta)).norm()
    }

    /// Largest truncation error over a set of eigenphases.
    pub fn truncation_bound(&self, thetas: &[f64]) -> f64 {
        thetas
            .iter()
            .map(|&t| self.truncation_error(t))
            .fold(0.0, f64::max)
    }
}

fn series_sum(w: &[f64], l: usize, theta: f64) -> c64 {
    let l = l as isize;
    (-l..=l)
        .map(|n| c64::cis(n as f64 * theta) * w[(n + l) as usize])
        .sum()
}

/// Evaluates the coefficient window at order `alpha`. `l` must be at least 1.
pub fn sinc_coeffs(alpha: f64, l: usize) -> SincCoeffs {
    assert!(l >= 1, "truncation order must be at least 1");
    let li = l as isize;
    let c = (-li..=li).map(|n| sinc(alpha - n as f64)).collect();
    let dc = (-li..=li).map(|n| sinc_prime(alpha - n as f64)).collect();
    SincCoeffs { alpha, l, c, dc }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn integer_orders_collapse_to_delta() {
        let s = sinc_coeffs(0.0, 2);
        assert_eq!(s.c, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        let s = sinc_coeffs(1.0, 2);
        assert_eq!(s.c, vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        for m in -7..=7 {
            let s = sinc_coeffs(m as f64, 7);
            for n in -7..=7 {
                assert_eq!(s.c(n), if n == m { 1.0 } else { 0.0 }, "m={m} n={n}");
            }
        }
    }

    #[test]
    fn half_order_values() {
        let s = sinc_coeffs(0.5, 3);
        let two_over_pi = 2.0 / PI;
        assert!((s.c(0) - two_over_pi).abs() < 1e-15);
        assert!((s.c(1) - two_over_pi).abs() < 1e-15);
        assert!((s.c(-1) + 2.0 / (3.0 * PI)).abs() < 1e-15);
        assert!((s.c(0) - 0.6366198).abs() < 1e-7);
        assert!((s.c(-1) + 0.2122066).abs() < 1e-7);
    }

    #[test]
    fn derivative_matches_closed_form() {
        // d/dx sin(πx)/(πx) at x = 0.5 is (0 − 2/π)/0.5
        assert!((sinc_prime(0.5) + 4.0 / PI).abs() < 1e-14);
        assert_eq!(sinc_prime(0.0), 0.0);
        // at nonzero integers sinc'(m) = cos(πm)/m
        assert!((sinc_prime(1.0) + 1.0).abs() < 1e-15);
        assert!((sinc_prime(-2.0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn series_branch_is_continuous() {
        for x in [0.9e-6, 1.1e-6, 5e-7, 2e-6] {
            let direct = (PI * x).sin() / (PI * x);
            assert!((sinc(x) - direct).abs() < 1e-12);
            let h = 1e-8;
            let fd = (sinc(x + h) - sinc(x - h)) / (2.0 * h);
            assert!((sinc_prime(x) - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn truncated_series_converges_inside_the_circle() {
        let s = sinc_coeffs(0.5, 200);
        for theta in [-2.0, -0.3, 0.0, 1.1, 2.5] {
            assert!(s.truncation_error(theta) < 5e-3, "θ={theta}");
        }
    }

    proptest! {
        #[test]
        fn sinc_is_exactly_even(x in -50.0f64..50.0) {
            prop_assert_eq!(sinc(x).to_bits(), sinc(-x).to_bits());
            prop_assert_eq!(sinc_prime(x).to_bits(), (-sinc_prime(-x)).to_bits());
        }

        #[test]
        fn coefficient_parity_is_exact(alpha in -12.0f64..12.0, l in 1usize..30) {
            let pos = sinc_coeffs(alpha, l);
            let neg = sinc_coeffs(-alpha, l);
            let mut mirrored = pos.c.clone();
            mirrored.reverse();
            prop_assert_eq!(neg.c, mirrored);
        }

        #[test]
        fn derivative_matches_finite_difference(x in -20.0f64..20.0) {
            let h = 1e-5;
            let fd = (sinc(x + h) - sinc(x - h)) / (2.0 * h);
            prop_assert!((sinc_prime(x) - fd).abs() < 1e-8);
        }

        #[test]
        fn sinc_is_bounded(x in -1e3f64..1e3) {
            prop_assert!(sinc(x).abs() <= 1.0);
        }
    }
}
