//! Fractional operators: the exact eigendecomposition route and the truncated series.

use crate::c64;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::signal::GraphSignal;

use super::cache::PowerCache;
use super::eigen::UnitaryEigen;
use super::sinc::{sinc_coeffs, SincCoeffs};

/// A dense fractional-power operator `Q ≈ F^α`.
#[derive(Debug, Clone)]
pub struct FracOperator {
    q: CMat,
    alpha: f64,
    /// Truncation order, `None` for the exact operator.
    l: Option<usize>,
}

impl FracOperator {
    pub fn matrix(&self) -> &CMat {
        &self.q
    }

    pub fn into_matrix(self) -> CMat {
        self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn l(&self) -> Option<usize> {
        self.l
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }
}

/// `F^α = V diag(e^{jαθ}) V^H`.
pub fn exact_gfrft(e: &UnitaryEigen, alpha: f64) -> FracOperator {
    FracOperator {
        q: e.spectral_matrix(|t| c64::cis(alpha * t)),
        alpha,
        l: None,
    }
}

/// `dF^α/dα = V diag(jθ e^{jαθ}) V^H`.
pub fn exact_gfrft_grad(e: &UnitaryEigen, alpha: f64) -> CMat {
    e.spectral_matrix(|t| c64::new(0.0, t) * c64::cis(alpha * t))
}

fn coefficients(cache: &PowerCache, alpha: f64) -> SincCoeffs {
    let l = cache.l();
    if alpha.abs() > l as f64 + 1.0 {
        log::warn!(
            "order α={alpha} lies outside the series window |α| ≤ L+1 = {}; most coefficient mass is truncated",
            l + 1
        );
    }
    sinc_coeffs(alpha, l)
}

/// `Q_L^α = c_0 I + Σ_{n=1}^{L} (c_n F^n + c_{−n} (F^n)^H)`.
pub fn fgfrft_matrix(cache: &PowerCache, alpha: f64) -> FracOperator {
    let s = coefficients(cache, alpha);
    FracOperator {
        q: cache.combine(&[&s.c]).pop().expect("one weight set"),
        alpha,
        l: Some(cache.l()),
    }
}

/// [`fgfrft_matrix`] truncated at `l`, which may be below the cache order.
pub fn fgfrft_matrix_order(cache: &PowerCache, alpha: f64, l: usize) -> Result<FracOperator> {
    if l == 0 || l > cache.l() {
        return Err(Error::Parameter(format!(
            "truncation order {l} outside 1..={} of the cache",
            cache.l()
        )));
    }
    let s = sinc_coeffs(alpha, l);
    Ok(FracOperator {
        q: cache
            .combine_order(l, &[&s.c])
            .pop()
            .expect("one weight set"),
        alpha,
        l: Some(l),
    })
}

/// `dQ_L^α/dα = Σ_{n=−L}^{L} c'_n(α) F^n`.
pub fn fgfrft_grad(cache: &PowerCache, alpha: f64) -> CMat {
    let s = coefficients(cache, alpha);
    cache.combine(&[&s.dc]).pop().expect("one weight set")
}

/// Operator and derivative from a single pass over the cache.
pub fn fgfrft_matrix_and_grad(cache: &PowerCache, alpha: f64) -> (FracOperator, CMat) {
    let s = coefficients(cache, alpha);
    let mut out = cache.combine(&[&s.c, &s.dc]);
    let dq = out.pop().expect("two weight sets");
    let q = out.pop().expect("two weight sets");
    (
        FracOperator {
            q,
            alpha,
            l: Some(cache.l()),
        },
        dq,
    )
}

fn check_len(op: &FracOperator, x: &GraphSignal) -> Result<()> {
    if x.len() != op.n() {
        return Err(Error::Shape(format!(
            "signal has {} vertices, operator is {}x{}",
            x.len(),
            op.n(),
            op.n()
        )));
    }
    Ok(())
}

/// `Q x`.
pub fn apply_forward(op: &FracOperator, x: &GraphSignal) -> Result<GraphSignal> {
    check_len(op, x)?;
    Ok(GraphSignal::new(linalg::mul(
        op.q.as_ref(),
        x.as_mat().as_ref(),
        linalg::parallelism(),
    )))
}

/// `Q^H x`, the inverse transform (equal to building at `−α` for the series operator).
pub fn apply_inverse(op: &FracOperator, x: &GraphSignal) -> Result<GraphSignal> {
    check_len(op, x)?;
    Ok(GraphSignal::new(linalg::mul(
        op.q.adjoint(),
        x.as_mat().as_ref(),
        linalg::parallelism(),
    )))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use faer::Mat;

    use super::*;
    use crate::graph::{random_unitary, synthetic_unitary, GftMatrix, Provenance};
    use crate::transform::{build_power_cache, eigendecompose_unitary};

    fn rel(a: &CMat, b: &CMat) -> f64 {
        linalg::frobenius((a - b).as_ref()) / linalg::frobenius(b.as_ref()).max(f64::MIN_POSITIVE)
    }

    fn rotation(phi: f64) -> CMat {
        let (s, c) = phi.sin_cos();
        Mat::from_fn(2, 2, |i, j| {
            c64::new(
                match (i, j) {
                    (0, 0) | (1, 1) => c,
                    (0, 1) => -s,
                    _ => s,
                },
                0.0,
            )
        })
    }

    #[test]
    fn exact_operator_special_orders() {
        let f = synthetic_unitary(&[0.4, -1.3, 2.2, 3.0, -2.9, 0.0], 8).unwrap();
        let e = eigendecompose_unitary(&f).unwrap();
        let id = exact_gfrft(&e, 0.0);
        assert!(linalg::frobenius((id.matrix() - CMat::identity(6, 6)).as_ref()) < 1e-12);
        assert!(rel(exact_gfrft(&e, 1.0).matrix(), f.matrix()) < 1e-9);
        let ff = linalg::mul(f.matrix().as_ref(), f.matrix().as_ref(), faer::Par::Seq);
        assert!(rel(exact_gfrft(&e, 2.0).matrix(), &ff) < 1e-9);
    }

    #[test]
    fn exact_half_rotation() {
        let f = GftMatrix::new(rotation(PI / 4.0), Provenance::Graph).unwrap();
        let e = eigendecompose_unitary(&f).unwrap();
        assert!(rel(exact_gfrft(&e, 0.5).matrix(), &rotation(PI / 8.0)) < 1e-12);
    }

    #[test]
    fn exact_gradient_of_rotation_at_zero() {
        let f = GftMatrix::new(rotation(PI / 4.0), Provenance::Graph).unwrap();
        let e = eigendecompose_unitary(&f).unwrap();
        let g = exact_gfrft_grad(&e, 0.0);
        // d/dα rotation(απ/4) at 0 = (π/4) [[0, −1], [1, 0]]
        let want = Mat::from_fn(2, 2, |i, j| {
            c64::new(
                match (i, j) {
                    (0, 1) => -PI / 4.0,
                    (1, 0) => PI / 4.0,
                    _ => 0.0,
                },
                0.0,
            )
        });
        assert!(linalg::frobenius((&g - &want).as_ref()) < 1e-12);
        let flat = synthetic_unitary(&[0.0; 4], 1).unwrap();
        let e0 = eigendecompose_unitary(&flat).unwrap();
        assert_eq!(linalg::frobenius(exact_gfrft_grad(&e0, 0.7).as_ref()), 0.0);
    }

    #[test]
    fn exact_gradient_matches_finite_difference() {
        let f = random_unitary(24, 6).unwrap();
        let e = eigendecompose_unitary(&f).unwrap();
        let h = 1e-4;
        for alpha in [0.15, 0.8, 1.5, -0.4] {
            let fd = (exact_gfrft(&e, alpha + h).into_matrix()
                - exact_gfrft(&e, alpha - h).into_matrix())
                * faer::Scale(c64::new(0.5 / h, 0.0));
            assert!(rel(&exact_gfrft_grad(&e, alpha), &fd) < 1e-6, "α={alpha}");
        }
    }

    #[test]
    fn fast_operator_integer_orders() {
        let f = random_unitary(40, 12).unwrap();
        let c = build_power_cache(&f, 10).unwrap();
        let q0 = fgfrft_matrix(&c, 0.0);
        assert_eq!(q0.matrix(), &CMat::identity(40, 40));
        assert!(rel(fgfrft_matrix(&c, 1.0).matrix(), f.matrix()) < 1e-12);
        for m in -10i32..=10 {
            let want = if m >= 0 {
                c.power(m as usize)
            } else {
                c.power((-m) as usize).adjoint().to_owned()
            };
            assert!(
                rel(fgfrft_matrix(&c, m as f64).matrix(), &want) <= 1e-10,
                "m={m}"
            );
        }
    }

    #[test]
    fn fast_half_rotation_error_is_scalar_truncation_error() {
        let f = GftMatrix::new(rotation(PI / 2.0), Provenance::Graph).unwrap();
        let c = build_power_cache(&f, 10).unwrap();
        let q = fgfrft_matrix(&c, 0.5);
        let s = sinc_coeffs(0.5, 10);
        let scalar = s.truncation_error(PI / 2.0);
        // error matrix is unitarily similar to diag(δ, conj δ) with |δ| = scalar
        let err = linalg::frobenius((q.matrix() - rotation(PI / 4.0)).as_ref());
        assert!(
            (err - scalar * 2f64.sqrt()).abs() < 1e-12,
            "{err} vs {scalar}"
        );
    }

    #[test]
    fn fast_gradient_on_identity() {
        let f = GftMatrix::new(CMat::identity(3, 3), Provenance::Graph).unwrap();
        let c = build_power_cache(&f, 6).unwrap();
        let g0 = fgfrft_grad(&c, 0.0);
        assert!(linalg::frobenius(g0.as_ref()) < 1e-15);
        let s = sinc_coeffs(0.3, 6);
        let sum: f64 = s.dc.iter().sum();
        let g = fgfrft_grad(&c, 0.3);
        for i in 0..3 {
            assert!((g[(i, i)].re - sum).abs() < 1e-14);
        }
        // integer orders give finite gradients
        assert!(fgfrft_grad(&c, 2.0).norm_l2().is_finite());
    }

    #[test]
    fn fast_gradient_matches_finite_difference() {
        let f = random_unitary(30, 2).unwrap();
        let c = build_power_cache(&f, 10).unwrap();
        let h = 1e-4;
        for alpha in [0.15, 0.35, 0.55, 0.75, 0.95, 1.0, 1.5] {
            let fd = (fgfrft_matrix(&c, alpha + h).into_matrix()
                - fgfrft_matrix(&c, alpha - h).into_matrix())
                * faer::Scale(c64::new(0.5 / h, 0.0));
            let (_, g) = fgfrft_matrix_and_grad(&c, alpha);
            assert!(rel(&g, &fd) < 1e-6, "α={alpha}");
            assert_eq!(g, fgfrft_grad(&c, alpha));
        }
    }

    #[test]
    fn apply_round_trips() {
        let f = random_unitary(20, 3).unwrap();
        let c = build_power_cache(&f, 10).unwrap();
        let x = GraphSignal::from_real(&(0..20).map(|i| (i as f64).cos()).collect::<Vec<_>>());
        let id = fgfrft_matrix(&c, 0.0);
        assert_eq!(apply_forward(&id, &x).unwrap(), x);
        assert_eq!(apply_inverse(&id, &x).unwrap(), x);
        let zero = GraphSignal::zeros(20, 1);
        assert_eq!(
            apply_forward(&fgfrft_matrix(&c, 0.7), &zero)
                .unwrap()
                .norm(),
            0.0
        );

        let one = fgfrft_matrix(&c, 1.0);
        let back = apply_inverse(&one, &apply_forward(&one, &x).unwrap()).unwrap();
        assert!(rel(back.as_mat(), x.as_mat()) < 1e-10);

        let wrong = GraphSignal::zeros(19, 1);
        assert!(matches!(apply_forward(&one, &wrong), Err(Error::Shape(_))));
        assert!(matches!(apply_inverse(&one, &wrong), Err(Error::Shape(_))));
    }

    #[test]
    fn forward_error_within_truncation_bound() {
        let phases: Vec<f64> = (0..32).map(|k| -2.7 + 0.17 * k as f64).collect();
        let f = synthetic_unitary(&phases, 4).unwrap();
        let e = eigendecompose_unitary(&f).unwrap();
        let c = build_power_cache(&f, 10).unwrap();
        let x =
            GraphSignal::from_real(&(0..32).map(|i| (i as f64 * 0.37).sin()).collect::<Vec<_>>());
        let fast = apply_forward(&fgfrft_matrix(&c, 0.7), &x).unwrap();
        let exact = apply_forward(&exact_gfrft(&e, 0.7), &x).unwrap();
        let err = rel(fast.as_mat(), exact.as_mat());
        let bound = sinc_coeffs(0.7, 10).truncation_bound(&phases);
        assert!(err <= bound * (1.0 + 1e-9), "{err} > {bound}");
    }
}
