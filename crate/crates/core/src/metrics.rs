//! Matrix approximation errors and signal/image quality metrics.

use std::fmt;

use faer::MatRef;

use crate::c64;
use crate::error::{Error, Result};

/// Element-wise errors of an approximation `D = approx − reference`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    /// `Σ|D_ij|² / N²`
    pub mse: f64,
    /// `Σ|D_ij| / N²`
    pub mae: f64,
    /// `‖D‖_F² / ‖reference‖_F²`
    pub nmse: f64,
    /// Matrix dimension.
    pub n: usize,
}

pub fn matrix_errors(approx: MatRef<'_, c64>, reference: MatRef<'_, c64>) -> Result<ErrorReport> {
    if approx.nrows() != reference.nrows() || approx.ncols() != reference.ncols() {
        return Err(Error::Shape(format!(
            "approximation is {}x{}, reference is {}x{}",
            approx.nrows(),
            approx.ncols(),
            reference.nrows(),
            reference.ncols()
        )));
    }
    let (mut sq, mut abs, mut ref_sq) = (0.0, 0.0, 0.0);
    for j in 0..approx.ncols() {
        for i in 0..approx.nrows() {
            let r = reference[(i, j)];
            let d = approx[(i, j)] - r;
            sq += d.norm_sqr();
            abs += d.norm();
            ref_sq += r.norm_sqr();
        }
    }
    if ref_sq == 0.0 {
        return Err(Error::Undefined(
            "NMSE against an all-zero reference".into(),
        ));
    }
    let count = (approx.nrows() * approx.ncols()) as f64;
    Ok(ErrorReport {
        mse: sq / count,
        mae: abs / count,
        nmse: sq / ref_sq,
        n: approx.nrows(),
    })
}

/// Peak signal-to-noise ratio in dB; identical signals have infinite PSNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl Psnr {
    /// The value in dB, with `f64::INFINITY` for identical signals.
    pub fn db(self) -> f64 {
        match self {
            Psnr::Finite(v) => v,
            Psnr::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Psnr::Infinite)
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v:.4}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

/// `10·log10(peak² / MSE)`.
pub fn psnr(reconstruction: &[f64], reference: &[f64], peak: f64) -> Result<Psnr> {
    if reconstruction.len() != reference.len() {
        return Err(Error::Shape(format!(
            "reconstruction has {} samples, reference has {}",
            reconstruction.len(),
            reference.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::Shape("PSNR of empty signals".into()));
    }
    if !(peak > 0.0) {
        return Err(Error::Parameter(format!(
            "peak must be positive, got {peak}"
        )));
    }
    let mse = reconstruction
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.len() as f64;
    Ok(if mse == 0.0 {
        Psnr::Infinite
    } else {
        Psnr::Finite(10.0 * (peak * peak / mse).log10())
    })
}

/// Row-major grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::Shape(format!(
                "{} pixels do not form a {rows}x{cols} image",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, wi) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *wi = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// Separable "valid" filtering with the 11-tap Gaussian.
fn filter_valid(img: &[f64], rows: usize, cols: usize, w: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let oc = cols - SSIM_WINDOW + 1;
    let or = rows - SSIM_WINDOW + 1;
    let mut horiz = vec![0.0; rows * oc];
    for r in 0..rows {
        let row = &img[r * cols..(r + 1) * cols];
        for c in 0..oc {
            horiz[r * oc + c] = w
                .iter()
                .zip(&row[c..c + SSIM_WINDOW])
                .map(|(a, b)| a * b)
                .sum();
        }
    }
    let mut out = vec![0.0; or * oc];
    for r in 0..or {
        for c in 0..oc {
            out[r * oc + c] = (0..SSIM_WINDOW)
                .map(|k| w[k] * horiz[(r + k) * oc + c])
                .sum();
        }
    }
    out
}

/// Mean structural similarity with an 11×11 Gaussian window (σ = 1.5),
/// `C1 = (0.01·peak)²`, `C2 = (0.03·peak)²`.
pub fn ssim(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::Shape(format!(
            "images are {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    if a.rows < SSIM_WINDOW || a.cols < SSIM_WINDOW {
        return Err(Error::Shape(format!(
            "{}x{} image is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window",
            a.rows, a.cols
        )));
    }
    if !(peak > 0.0) {
        return Err(Error::Parameter(format!(
            "peak must be positive, got {peak}"
        )));
    }
    let (rows, cols) = (a.rows, a.cols);
    let w = gaussian_window();
    let prod = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>();
    let mu_a = filter_valid(&a.data, rows, cols, &w);
    let mu_b = filter_valid(&b.data, rows, cols, &w);
    let e_aa = filter_valid(&prod(&a.data, &a.data), rows, cols, &w);
    let e_bb = filter_valid(&prod(&b.data, &b.data), rows, cols, &w);
    let e_ab = filter_valid(&prod(&a.data, &b.data), rows, cols, &w);
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let total: f64 = (0..mu_a.len())
        .map(|k| {
            let (ma, mb) = (mu_a[k], mu_b[k]);
            let va = e_aa[k] - ma * ma;
            let vb = e_bb[k] - mb * mb;
            let cov = e_ab[k] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .sum();
    Ok(total / mu_a.len() as f64)
}

/// Point-cloud PSNR peak: the largest per-axis coordinate range of the clean cloud.
pub fn cloud_peak<P: AsRef<[f64]>>(points: &[P]) -> f64 {
    let dim = points.first().map_or(0, |p| p.as_ref().len());
    (0..dim)
        .map(|d| {
            let (lo, hi) = points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    let v = p.as_ref()[d];
                    (lo.min(v), hi.max(v))
                });
            hi - lo
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;
    use faer::Mat;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_matrices_have_zero_error() {
        let a = Mat::from_fn(3, 3, |i, j| c64::new(i as f64, j as f64 + 1.0));
        let r = matrix_errors(a.as_ref(), a.as_ref()).unwrap();
        assert_eq!((r.mse, r.mae, r.nmse, r.n), (0.0, 0.0, 0.0, 3));
    }

    #[test]
    fn hand_computed_errors() {
        let reference = CMat::identity(2, 2);
        let approx = Mat::from_fn(2, 2, |i, j| {
            c64::new(
                if i == j { 1.0 } else { 0.0 } + if (i, j) == (0, 0) { 1.0 } else { 0.0 },
                0.0,
            )
        });
        let r = matrix_errors(approx.as_ref(), reference.as_ref()).unwrap();
        assert_eq!(r.mse, 0.25);
        assert_eq!(r.mae, 0.25);
        assert_eq!(r.nmse, 0.5);
    }

    #[test]
    fn zero_reference_and_shape_errors() {
        let z = CMat::zeros(2, 2);
        let i = CMat::identity(2, 2);
        assert!(matches!(
            matrix_errors(i.as_ref(), z.as_ref()),
            Err(Error::Undefined(_))
        ));
        let k = CMat::identity(3, 3);
        assert!(matches!(
            matrix_errors(i.as_ref(), k.as_ref()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn psnr_examples() {
        let x = vec![10.0, 20.0, 30.0];
        assert_eq!(psnr(&x, &x, 255.0).unwrap(), Psnr::Infinite);
        assert_eq!(psnr(&x, &x, 255.0).unwrap().to_string(), "inf");
        let y: Vec<f64> = x.iter().map(|v| v + 1.0).collect();
        let p = psnr(&y, &x, 255.0).unwrap().db();
        assert!((p - 20.0 * 255f64.log10()).abs() < 1e-12);
        assert!((p - 48.13).abs() < 0.01);
        assert!(matches!(psnr(&[], &[], 255.0), Err(Error::Shape(_))));
        assert!(matches!(psnr(&x, &x[..2], 255.0), Err(Error::Shape(_))));
    }

    fn ramp(rows: usize, cols: usize) -> Image {
        Image::new(
            rows,
            cols,
            (0..rows * cols)
                .map(|k| ((k / cols) as f64 * 7.0 + (k % cols) as f64 * 3.0) % 256.0)
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn ssim_examples() {
        let a = ramp(32, 24);
        assert!((ssim(&a, &a, 255.0).unwrap() - 1.0).abs() < 1e-12);
        let inv = Image::new(32, 24, a.data().iter().map(|v| 255.0 - v).collect()).unwrap();
        assert!(ssim(&a, &inv, 255.0).unwrap() < 1.0);

        let (p, q) = (100.0, 140.0);
        let ca = Image::new(16, 16, vec![p; 256]).unwrap();
        let cb = Image::new(16, 16, vec![q; 256]).unwrap();
        let c1 = (0.01f64 * 255.0).powi(2);
        let want = (2.0 * p * q + c1) / (p * p + q * q + c1);
        assert!((ssim(&ca, &cb, 255.0).unwrap() - want).abs() < 1e-12);

        let small = ramp(10, 30);
        assert!(matches!(ssim(&small, &small, 255.0), Err(Error::Shape(_))));
        assert!(matches!(
            ssim(&a, &ramp(24, 32), 255.0),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn cloud_peak_is_largest_axis_range() {
        let pts = [[0.0, 5.0, -1.0], [2.0, 6.0, 3.0], [1.0, 5.5, 0.0]];
        assert_eq!(cloud_peak(&pts), 4.0);
    }

    proptest! {
        #[test]
        fn error_identities(seed in 0u64..500, n in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = Mat::from_fn(n, n, |_, _| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let a = Mat::from_fn(n, n, |_, _| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let rep = matrix_errors(a.as_ref(), r.as_ref()).unwrap();
            let dmax = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| (a[(i, j)] - r[(i, j)]).norm()).fold(0.0, f64::max);
            prop_assert!(rep.mse <= rep.mae * dmax * (1.0 + 1e-12));
            let ref_sq: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| r[(i, j)].norm_sqr()).sum();
            let lhs = rep.nmse * ref_sq;
            let rhs = (n * n) as f64 * rep.mse;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn psnr_decreases_with_noise_power(seed in 0u64..200, s1 in 0.1f64..10.0, ratio in 1.01f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..64).map(|_| rng.random_range(0.0..255.0)).collect();
            let e: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
            let noisy = |s: f64| x.iter().zip(&e).map(|(a, b)| a + s * b).collect::<Vec<_>>();
            let p1 = psnr(&noisy(s1), &x, 255.0).unwrap().db();
            let p2 = psnr(&noisy(s1 * ratio), &x, 255.0).unwrap().db();
            prop_assert!(p2 < p1);
        }

        #[test]
        fn ssim_of_self_is_one(seed in 0u64..100, rows in 11usize..20, cols in 11usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = Image::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(0.0..255.0)).collect()).unwrap();
            prop_assert!((ssim(&img, &img, 255.0).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
