//! Eigendecomposition of unitary matrices.
//!
//! A unitary `F` is normal, so it is diagonalized by a unitary `V`. Instead of
//! a general non-Hermitian eigensolver we rotate the spectrum so that `−1`
//! is not an eigenvalue, apply the Cayley transform
//! `K = j (I + G)^{-1} (I − G)`, which is Hermitian with eigenvalues
//! `tan(φ/2)`, and diagonalize `K` with the Hermitian solver. Phases are then
//! refined with Rayleigh quotients against the original `F`.

use std::f64::consts::{FRAC_PI_2, PI};

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

use crate::c64;
use crate::error::{Error, Result};
use crate::graph::GftMatrix;
use crate::linalg::{self, CMat};

/// Largest accepted `‖F V − V diag(e^{jθ})‖_F / ‖F‖_F`.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-6;

/// `F = V diag(e^{jθ}) V^H` with phases in `(−π, π]`, ascending.
#[derive(Debug, Clone)]
pub struct UnitaryEigen {
    v: CMat,
    theta: Vec<f64>,
}

impl UnitaryEigen {
    /// Assembles a decomposition from parts; phases are wrapped and sorted with their columns.
    pub fn from_parts(v: CMat, theta: Vec<f64>) -> Result<Self> {
        if v.nrows() != v.ncols() || v.ncols() != theta.len() {
            return Err(Error::Shape(format!(
                "eigenvector matrix {}x{} does not match {} phases",
                v.nrows(),
                v.ncols(),
                theta.len()
            )));
        }
        Ok(sorted(
            v,
            theta.into_iter().map(linalg::wrap_phase).collect(),
        ))
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn v(&self) -> &CMat {
        &self.v
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `V diag(d) V^H` for per-eigenvalue weights `d`.
    pub fn spectral_matrix(&self, d: impl Fn(f64) -> c64) -> CMat {
        crate::graph::spectral_product(&self.v, self.theta.iter().map(|&t| d(t)))
    }

    /// `V diag(e^{jθ}) V^H`.
    pub fn reconstruct(&self) -> CMat {
        self.spectral_matrix(c64::cis)
    }
}

fn sorted(v: CMat, theta: Vec<f64>) -> UnitaryEigen {
    let mut order: Vec<usize> = (0..theta.len()).collect();
    order.sort_by(|&a, &b| theta[a].total_cmp(&theta[b]));
    let v = Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, order[j])]);
    let theta = order.iter().map(|&k| theta[k]).collect();
    UnitaryEigen { v, theta }
}

/// Eigenphases only (ascending), using the known spectrum when present.
pub fn eigenphases(f: &GftMatrix) -> Result<Vec<f64>> {
    let mut phases = match f.known_spectrum() {
        Some(s) => s.phases.iter().copied().map(linalg::wrap_phase).collect(),
        None => raw_eigenphases(f)?,
    };
    phases.sort_by(f64::total_cmp);
    Ok(phases)
}

fn raw_eigenphases(f: &GftMatrix) -> Result<Vec<f64>> {
    let values = match f.real_matrix() {
        Some(r) => r.eigenvalues(),
        None => f.matrix().eigenvalues(),
    }
    .map_err(|e| Error::numerical(format!("eigenvalue iteration failed: {e:?}"), f64::NAN))?;
    Ok(values.iter().map(|z| linalg::wrap_phase(z.arg())).collect())
}

/// Rotation `ψ` such that `e^{−jψ}` moves the centre of the widest phase gap to `π`.
fn gap_rotation(phases: &[f64]) -> f64 {
    let mut p = phases.to_vec();
    p.sort_by(f64::total_cmp);
    let n = p.len();
    let mut best = (p[0] + 2.0 * PI - p[n - 1], p[n - 1]);
    for w in p.windows(2) {
        let gap = w[1] - w[0];
        if gap > best.0 {
            best = (gap, w[0]);
        }
    }
    let centre = best.1 + 0.5 * best.0;
    centre - PI
}

/// Residual accepted from the blind rotations before falling back.
const FIRST_TRY_TOL: f64 = 1e-9;

/// Largest Cayley-matrix entry worth an eigensolve; larger means an eigenvalue at `−1`.
const CAYLEY_GROWTH_LIMIT: f64 = 1e8;

/// Unitary eigendecomposition of `f`, returning the known spectrum when present.
///
/// Eigenvectors come from the Hermitian matrix `j (I + G)^{-1} (I − G)` with
/// `G = e^{−jψ} F`. The rotations `ψ = 0` and `ψ = π/2` are tried first (real
/// orthogonal matrices often have eigenvalues exactly at `±1`, never forced at `±j`);
/// if neither is accurate, `ψ` is chosen to put the widest phase gap at `π`.
pub fn eigendecompose_unitary(f: &GftMatrix) -> Result<UnitaryEigen> {
    if let Some(s) = f.known_spectrum() {
        return UnitaryEigen::from_parts(s.v.clone(), s.phases.clone());
    }
    for psi in [0.0, FRAC_PI_2] {
        match cayley_attempt(f, psi) {
            Ok((w, theta, residual)) if residual <= FIRST_TRY_TOL => return Ok(sorted(w, theta)),
            Ok((_, _, residual)) => {
                log::debug!("eigendecomposition at ψ = {psi}: residual {residual:.2e}")
            }
            Err(e) => log::debug!("eigendecomposition at ψ = {psi}: {e}"),
        }
    }
    let psi = gap_rotation(&raw_eigenphases(f)?);
    let (w, theta, residual) = cayley_attempt(f, psi)?;
    if !(residual <= EIGEN_RESIDUAL_TOL) {
        return Err(Error::numerical(
            "unitary eigendecomposition does not reconstruct the matrix",
            residual,
        ));
    }
    Ok(sorted(w, theta))
}

/// Eigenvectors, refined phases and residual for one rotation `ψ`.
fn cayley_attempt(f: &GftMatrix, psi: f64) -> Result<(CMat, Vec<f64>, f64)> {
    let n = f.n();
    let real = f.real_matrix();
    let fm = f.matrix();
    let m = match (&real, psi == 0.0) {
        (Some(r), true) => {
            // real F: (I + F)^{-1} (I − F) stays real
            let a = Mat::from_fn(n, n, |i, j| r[(i, j)] + if i == j { 1.0 } else { 0.0 });
            let mut b = Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - r[(i, j)]);
            a.partial_piv_lu().solve_in_place(b.as_mut());
            drop(a);
            linalg::to_complex(b.as_ref())
        }
        _ => {
            // G = e^{−jψ} F, A = I + G, B = I − G
            let rot = c64::cis(-psi);
            let mut a = Mat::from_fn(n, n, |i, j| rot * fm[(i, j)]);
            let mut b = Mat::from_fn(n, n, |i, j| -a[(i, j)]);
            for i in 0..n {
                a[(i, i)] += 1.0;
                b[(i, i)] += 1.0;
            }
            a.partial_piv_lu().solve_in_place(b.as_mut());
            b
        }
    };
    let growth = m
        .col_iter()
        .map(|c| {
            c.iter()
                .fold(0.0, |g: f64, z| g.max(z.re.abs()).max(z.im.abs()))
        })
        .fold(0.0, f64::max);
    if !(growth <= CAYLEY_GROWTH_LIMIT) {
        return Err(Error::numerical(
            "Cayley transform is numerically singular",
            growth,
        ));
    }
    // K = j M, Hermitian up to rounding
    let k = Mat::from_fn(n, n, |i, j| {
        let kij = c64::new(-m[(i, j)].im, m[(i, j)].re);
        let kji = c64::new(-m[(j, i)].im, m[(j, i)].re);
        (kij + kji.conj()) * 0.5
    });
    drop(m);
    let evd = k
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::numerical(format!("Hermitian eigensolver failed: {e:?}"), f64::NAN))?;
    let w = evd.U().to_owned();
    drop(evd);

    let fw = match &real {
        Some(r) => linalg::mul_real_complex(r.as_ref(), w.as_ref(), linalg::parallelism()),
        None => linalg::mul(fm.as_ref(), w.as_ref(), linalg::parallelism()),
    };
    let theta: Vec<f64> = (0..n)
        .map(|j| {
            let rq: c64 = (0..n).map(|i| w[(i, j)].conj() * fw[(i, j)]).sum();
            linalg::wrap_phase(rq.arg())
        })
        .collect();
    let residual = eigen_residual(w.as_ref(), fw.as_ref(), &theta);
    Ok((w, theta, residual))
}

/// `‖F V − V diag(e^{jθ})‖_F / √N`, given `F V`.
fn eigen_residual(v: MatRef<'_, c64>, fv: MatRef<'_, c64>, theta: &[f64]) -> f64 {
    let n = v.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        let lam = c64::cis(theta[j]);
        for i in 0..n {
            acc += (fv[(i, j)] - v[(i, j)] * lam).norm_sqr();
        }
    }
    (acc / n as f64).sqrt()
}
