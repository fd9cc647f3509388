//! Dense linear-algebra helpers shared by the graph, transform and learning modules.

use std::hash::{DefaultHasher, Hasher};

use faer::linalg::matmul::matmul;
use faer::traits::Conjugate;
use faer::{Accum, Mat, MatRef, Par};

use crate::c64;

/// Dense complex matrix.
pub type CMat = Mat<c64>;

/// Parallelism used by the non-timed dense kernels.
pub fn parallelism() -> Par {
    faer::get_global_parallelism()
}

/// Sets the number of worker threads for dense kernels. `1` forces sequential execution.
pub fn set_threads(threads: usize) {
    let par = if threads <= 1 {
        Par::Seq
    } else {
        Par::rayon(threads)
    };
    faer::set_global_parallelism(par);
}

/// Runs `f` with dense kernels forced onto the calling thread.
pub fn with_sequential<R>(f: impl FnOnce() -> R) -> R {
    struct Restore(Par);
    impl Drop for Restore {
        fn drop(&mut self) {
            faer::set_global_parallelism(self.0);
        }
    }
    let _restore = Restore(faer::get_global_parallelism());
    faer::set_global_parallelism(Par::Seq);
    f()
}

pub fn to_complex(a: MatRef<'_, f64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| c64::new(a[(i, j)], 0.0))
}

/// Returns the real part of `a` if every imaginary part is exactly zero.
pub fn as_real(a: MatRef<'_, c64>) -> Option<Mat<f64>> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if a[(i, j)].im != 0.0 {
                return None;
            }
        }
    }
    Some(Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].re))
}

/// `a · b` for complex operands, either of which may be a conjugated view (e.g. `x.adjoint()`).
pub fn mul<A, B>(a: MatRef<'_, A>, b: MatRef<'_, B>, par: Par) -> CMat
where
    A: Conjugate<Canonical = c64>,
    B: Conjugate<Canonical = c64>,
{
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, c64::new(1.0, 0.0), par);
    out
}

pub fn mul_real(a: MatRef<'_, f64>, b: MatRef<'_, f64>, par: Par) -> Mat<f64> {
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, 1.0, par);
    out
}

/// `a · b` for real `a` and complex `b`, using one real product on the stacked `[re | im]` columns.
pub fn mul_real_complex(a: MatRef<'_, f64>, b: MatRef<'_, c64>, par: Par) -> CMat {
    let k = b.ncols();
    let stacked = Mat::from_fn(b.nrows(), 2 * k, |i, j| {
        if j < k {
            b[(i, j)].re
        } else {
            b[(i, j - k)].im
        }
    });
    let prod = mul_real(a, stacked.as_ref(), par);
    Mat::from_fn(a.nrows(), k, |i, j| {
        c64::new(prod[(i, j)], prod[(i, j + k)])
    })
}

/// `a^T · b` for real `a` and complex `b`.
pub fn mul_real_t_complex(a: MatRef<'_, f64>, b: MatRef<'_, c64>, par: Par) -> CMat {
    mul_real_complex(a.transpose(), b, par)
}

pub fn frobenius(a: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

/// `‖F F^H − I‖_F / √N`.
pub fn unitarity_residual(f: MatRef<'_, c64>) -> f64 {
    let n = f.nrows();
    if n == 0 {
        return 0.0;
    }
    let par = parallelism();
    let gram = match as_real(f) {
        Some(r) => to_complex(mul_real(r.as_ref(), r.transpose(), par).as_ref()),
        None => mul(f, f.adjoint(), par),
    };
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            acc += (gram[(i, j)] - c64::new(target, 0.0)).norm_sqr();
        }
    }
    acc.sqrt() / (n as f64).sqrt()
}

/// Content hash of a complex matrix (shape and exact bit patterns).
pub fn fingerprint(a: MatRef<'_, c64>) -> u64 {
    let mut h = DefaultHasher::new();
    h.write_usize(a.nrows());
    h.write_usize(a.ncols());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            h.write_u64(z.re.to_bits());
            h.write_u64(z.im.to_bits());
        }
    }
    h.finish()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    let (p, q) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * p, a.ncols() * q, |i, j| {
        a[(i / p, j / q)] * b[(i % p, j % q)]
    })
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_complex_product_matches_complex_product() {
        let a = Mat::from_fn(5, 5, |i, j| (i as f64 - 2.0 * j as f64).sin());
        let b = Mat::from_fn(5, 3, |i, j| c64::new(i as f64 + 0.5, j as f64 - 1.0));
        let fast = mul_real_complex(a.as_ref(), b.as_ref(), Par::Seq);
        let slow = mul(to_complex(a.as_ref()).as_ref(), b.as_ref(), Par::Seq);
        let diff = &fast - &slow;
        assert!(frobenius(diff.as_ref()) < 1e-12);
    }

    #[test]
    fn wrap_phase_range() {
        use std::f64::consts::PI;
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_phase(0.25), 0.25);
    }

    #[test]
    fn fingerprint_detects_single_bit_change() {
        let a = Mat::from_fn(4, 4, |i, j| c64::new(i as f64, j as f64));
        let mut b = a.clone();
        b[(3, 3)].im = f64::from_bits(b[(3, 3)].im.to_bits() + 1);
        assert_eq!(fingerprint(a.as_ref()), fingerprint(a.clone().as_ref()));
        assert_ne!(fingerprint(a.as_ref()), fingerprint(b.as_ref()));
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let a = CMat::identity(2, 2);
        let b = CMat::identity(3, 3);
        let k = kron(a.as_ref(), b.as_ref());
        let diff = &k - &CMat::identity(6, 6);
        assert_eq!(frobenius(diff.as_ref()), 0.0);
    }
}
