//! Joint learning of a transform order and a diagonal spectral filter.
//!
//! The reconstruction is `x̂ = (Q^α)^H H Q^α y` with `H` real diagonal. Both
//! backends apply the operators to the signal directly (no `N × N` operator is
//! formed per epoch): the exact backend through `V` and `V^H`, the fast one
//! through the cached powers.

use std::time::Instant;

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::c64;
use crate::error::{Error, Result};
use crate::graph::GftMatrix;
use crate::linalg::{self, CMat};
use crate::signal::GraphSignal;
use crate::transform::{
    build_power_cache_with_budget, eigendecompose_unitary, sinc_coeffs, PowerCache, UnitaryEigen,
    DEFAULT_MEMORY_BUDGET,
};

use super::adam::AdamState;
use super::cascade::Backend;

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseConfig {
    pub l: usize,
    pub epochs: usize,
    pub lr: f64,
    pub alpha_init: f64,
    /// Standard deviation of the injected noise.
    pub sigma: f64,
    pub seed: u64,
    /// Use `‖Re x̂ − x‖²` instead of the full complex residual.
    pub loss_on_real: bool,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            l: 10,
            epochs: 300,
            lr: 0.01,
            alpha_init: 0.5,
            sigma: 20.0,
            seed: 0,
            loss_on_real: false,
        }
    }
}

impl DenoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::Parameter(
                "truncation order L must be at least 1".into(),
            ));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::Parameter(format!(
                "noise sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if !(self.lr > 0.0) || !self.alpha_init.is_finite() {
            return Err(Error::Parameter(
                "learning rate must be positive and the initial order finite".into(),
            ));
        }
        Ok(())
    }
}

/// Real diagonal spectral filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterDiag {
    pub h: Vec<f64>,
}

impl FilterDiag {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if let Some(k) = h.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "filter coefficient {k} is not finite"
            )));
        }
        Ok(Self { h })
    }

    pub fn ones(n: usize) -> Self {
        Self { h: vec![1.0; n] }
    }
}

/// Per-epoch loss (before the update), the running minimum, and the order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseRecord {
    pub epoch: usize,
    pub loss: f64,
    pub best_loss: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct DenoiseResult {
    /// Order with the lowest observed loss.
    pub alpha: f64,
    pub h: FilterDiag,
    /// Real part of the reconstruction at the best parameters.
    pub reconstruction: GraphSignal,
    pub loss: f64,
    pub trajectory: Vec<DenoiseRecord>,
    pub wall_seconds: f64,
}

/// Adds i.i.d. `N(0, σ²)` noise to the real part of every sample.
pub fn add_gaussian_noise(x: &GraphSignal, sigma: f64, seed: u64) -> Result<GraphSignal> {
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::Parameter(format!("invalid noise level {sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = x.as_mat();
    // column-major draw order, channel by channel
    let mut noise = vec![0.0; src.nrows() * src.ncols()];
    noise.iter_mut().for_each(|v| *v = normal.sample(&mut rng));
    Ok(GraphSignal::new(Mat::from_fn(
        src.nrows(),
        src.ncols(),
        |i, j| src[(i, j)] + c64::new(noise[j * src.nrows() + i], 0.0),
    )))
}

enum Engine<'a> {
    Exact {
        eig: &'a UnitaryEigen,
        /// `V^H y`
        y_hat: CMat,
    },
    Fast {
        cache: &'a PowerCache,
        /// `(F^k y, (F^k)^H y)` for `k = 1..=L`
        y_products: Vec<(CMat, CMat)>,
    },
}

/// Precomputed state for denoising one (multi-channel) signal.
pub struct Denoiser<'a> {
    engine: Engine<'a>,
    y: CMat,
    x: CMat,
    loss_on_real: bool,
}

fn check_pair(y: &GraphSignal, x: &GraphSignal, n: usize) -> Result<()> {
    if y.len() != n || x.len() != n {
        return Err(Error::Shape(format!(
            "signals have {} and {} vertices, operator dimension is {n}",
            y.len(),
            x.len()
        )));
    }
    if y.channels() != x.channels() {
        return Err(Error::Shape(format!(
            "noisy signal has {} channels, reference has {}",
            y.channels(),
            x.channels()
        )));
    }
    Ok(())
}

fn inner_re(a: &CMat, b: &CMat) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for (p, q) in a.col_as_slice(j).iter().zip(b.col_as_slice(j)) {
            acc += p.re * q.re + p.im * q.im;
        }
    }
    acc
}

fn scale_rows(m: &CMat, h: &[f64]) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * h[i])
}

impl<'a> Denoiser<'a> {
    pub fn exact(
        eig: &'a UnitaryEigen,
        y: &GraphSignal,
        x: &GraphSignal,
        loss_on_real: bool,
    ) -> Result<Self> {
        check_pair(y, x, eig.n())?;
        let y_hat = linalg::mul(
            eig.v().adjoint(),
            y.as_mat().as_ref(),
            linalg::parallelism(),
        );
        Ok(Self {
            engine: Engine::Exact { eig, y_hat },
            y: y.as_mat().clone(),
            x: x.as_mat().clone(),
            loss_on_real,
        })
    }

    pub fn fast(
        cache: &'a PowerCache,
        y: &GraphSignal,
        x: &GraphSignal,
        loss_on_real: bool,
    ) -> Result<Self> {
        check_pair(y, x, cache.n())?;
        let y_products = cache.power_products(y.as_mat().as_ref())?;
        Ok(Self {
            engine: Engine::Fast { cache, y_products },
            y: y.as_mat().clone(),
            x: x.as_mat().clone(),
            loss_on_real,
        })
    }

    fn entries(&self) -> f64 {
        (self.x.nrows() * self.x.ncols()) as f64
    }

    /// `(Q y, dQ/dα y)`.
    fn forward_y(&self, alpha: f64) -> (CMat, CMat) {
        match &self.engine {
            Engine::Exact { eig, y_hat } => {
                let (d, dd) = spectral_weights(eig, alpha);
                spectral_apply_pair(eig, y_hat, &d, &dd)
            }
            Engine::Fast { cache, y_products } => {
                let s = sinc_coeffs(alpha, cache.l());
                let l = cache.l();
                let mut a = Mat::from_fn(self.y.nrows(), self.y.ncols(), |i, j| {
                    self.y[(i, j)] * s.c[l]
                });
                let mut da = Mat::from_fn(self.y.nrows(), self.y.ncols(), |i, j| {
                    self.y[(i, j)] * s.dc[l]
                });
                for (k, (fwd, adj)) in y_products.iter().enumerate() {
                    let k = k + 1;
                    for j in 0..a.ncols() {
                        for i in 0..a.nrows() {
                            a[(i, j)] += fwd[(i, j)] * s.c[l + k] + adj[(i, j)] * s.c[l - k];
                            da[(i, j)] += fwd[(i, j)] * s.dc[l + k] + adj[(i, j)] * s.dc[l - k];
                        }
                    }
                }
                (a, da)
            }
        }
    }

    /// `Q^H w`.
    fn adjoint(&self, alpha: f64, w: &CMat) -> CMat {
        match &self.engine {
            Engine::Exact { eig, .. } => {
                let (d, _) = spectral_weights(eig, alpha);
                let conj: Vec<c64> = d.iter().map(|z| z.conj()).collect();
                let w_hat = linalg::mul(eig.v().adjoint(), w.as_ref(), linalg::parallelism());
                spectral_apply(eig, &w_hat, &conj)
            }
            Engine::Fast { cache, .. } => {
                let mut mirrored = sinc_coeffs(alpha, cache.l()).c;
                mirrored.reverse();
                cache
                    .apply_combined(w.as_ref(), &[&mirrored])
                    .expect("dimension checked at construction")
                    .pop()
                    .expect("one weight set")
            }
        }
    }

    /// `(Q r, dQ/dα r)`.
    fn forward_with_grad(&self, alpha: f64, r: &CMat) -> (CMat, CMat) {
        match &self.engine {
            Engine::Exact { eig, .. } => {
                let (d, dd) = spectral_weights(eig, alpha);
                let r_hat = linalg::mul(eig.v().adjoint(), r.as_ref(), linalg::parallelism());
                spectral_apply_pair(eig, &r_hat, &d, &dd)
            }
            Engine::Fast { cache, .. } => {
                let s = sinc_coeffs(alpha, cache.l());
                let mut out = cache
                    .apply_combined(r.as_ref(), &[&s.c, &s.dc])
                    .expect("dimension checked at construction");
                let dq = out.pop().expect("two weight sets");
                (out.pop().expect("two weight sets"), dq)
            }
        }
    }

    /// Reconstruction, residual against the reference, and the intermediates needed for gradients.
    fn evaluate(&self, alpha: f64, h: &[f64]) -> (CMat, CMat, CMat, CMat, CMat, f64) {
        let (a, da) = self.forward_y(alpha);
        let w = scale_rows(&a, h);
        let xh = self.adjoint(alpha, &w);
        let r = Mat::from_fn(xh.nrows(), xh.ncols(), |i, j| {
            let d = xh[(i, j)] - self.x[(i, j)];
            if self.loss_on_real {
                c64::new(d.re, 0.0)
            } else {
                d
            }
        });
        let loss = linalg::frobenius(r.as_ref()).powi(2) / self.entries();
        (a, da, w, xh, r, loss)
    }

    pub fn loss(&self, alpha: f64, h: &[f64]) -> f64 {
        self.evaluate(alpha, h).5
    }

    /// Loss, `∂𝓛/∂α`, `∂𝓛/∂H`, and the complex reconstruction.
    pub fn loss_and_grad(&self, alpha: f64, h: &[f64]) -> (f64, f64, Vec<f64>, CMat) {
        let (a, da, w, xh, r, loss) = self.evaluate(alpha, h);
        let (qr, dqr) = self.forward_with_grad(alpha, &r);
        let scale = 2.0 / self.entries();
        let h_da = scale_rows(&da, h);
        let d_alpha = scale * (inner_re(&dqr, &w) + inner_re(&qr, &h_da));
        let d_h: Vec<f64> = (0..h.len())
            .map(|k| {
                let s: f64 = (0..a.ncols())
                    .map(|c| {
                        let (p, q) = (qr[(k, c)], a[(k, c)]);
                        p.re * q.re + p.im * q.im
                    })
                    .sum();
                scale * s
            })
            .collect();
        (loss, d_alpha, d_h, xh)
    }

    /// Adam over `[α, H_1..H_N]` from `H = 1`, keeping the best parameters seen.
    pub fn run(&self, cfg: &DenoiseConfig) -> Result<DenoiseResult> {
        cfg.validate()?;
        let n = self.x.nrows();
        let start = Instant::now();
        let mut params = Vec::with_capacity(n + 1);
        params.push(cfg.alpha_init);
        params.extend(std::iter::repeat(1.0).take(n));
        let mut opt = AdamState::new(params, cfg.lr);

        let mut best_loss = f64::INFINITY;
        let mut best_params = opt.params.clone();
        let mut best_recon: Option<CMat> = None;
        let mut trajectory = Vec::with_capacity(cfg.epochs);
        let mut grad = vec![0.0; n + 1];
        for epoch in 1..=cfg.epochs {
            let alpha = opt.params[0];
            let (loss, d_alpha, d_h, recon) = self.loss_and_grad(alpha, &opt.params[1..]);
            if !loss.is_finite() {
                return Err(Error::Optimizer {
                    epoch,
                    index: 0,
                    what: format!("non-finite loss {loss}"),
                });
            }
            if loss < best_loss {
                best_loss = loss;
                best_params.copy_from_slice(&opt.params);
                best_recon = Some(recon);
            }
            trajectory.push(DenoiseRecord {
                epoch,
                loss,
                best_loss,
                alpha,
            });
            grad[0] = d_alpha;
            grad[1..].copy_from_slice(&d_h);
            opt.update(&grad).map_err(|e| match e {
                Error::Optimizer { index, what, .. } => Error::Optimizer { epoch, index, what },
                other => other,
            })?;
        }
        let recon = match best_recon {
            Some(r) => r,
            // zero epochs: report the initial state
            None => {
                let (_, _, _, xh, _, loss) = self.evaluate(cfg.alpha_init, &best_params[1..]);
                best_loss = loss;
                xh
            }
        };
        let reconstruction =
            GraphSignal::new(Mat::from_fn(recon.nrows(), recon.ncols(), |i, j| {
                c64::new(recon[(i, j)].re, 0.0)
            }));
        Ok(DenoiseResult {
            alpha: best_params[0],
            h: FilterDiag::new(best_params[1..].to_vec())?,
            reconstruction,
            loss: best_loss,
            trajectory,
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    }
}

/// `(e^{jαθ_k}, jθ_k e^{jαθ_k})`.
fn spectral_weights(eig: &UnitaryEigen, alpha: f64) -> (Vec<c64>, Vec<c64>) {
    eig.theta()
        .iter()
        .map(|&t| {
            let d = c64::cis(alpha * t);
            (d, c64::new(0.0, t) * d)
        })
        .unzip()
}

/// `V (d ⊙ z)` with `d` scaling rows of `z`.
fn spectral_apply(eig: &UnitaryEigen, z: &CMat, d: &[c64]) -> CMat {
    let scaled = Mat::from_fn(z.nrows(), z.ncols(), |i, j| z[(i, j)] * d[i]);
    linalg::mul(eig.v().as_ref(), scaled.as_ref(), linalg::parallelism())
}

/// `(V (d ⊙ z), V (e ⊙ z))` with a single pass over `V`.
fn spectral_apply_pair(eig: &UnitaryEigen, z: &CMat, d: &[c64], e: &[c64]) -> (CMat, CMat) {
    let c = z.ncols();
    let scaled = Mat::from_fn(z.nrows(), 2 * c, |i, j| {
        if j < c {
            z[(i, j)] * d[i]
        } else {
            z[(i, j - c)] * e[i]
        }
    });
    let both = linalg::mul(eig.v().as_ref(), scaled.as_ref(), linalg::parallelism());
    (both.subcols(0, c).to_owned(), both.subcols(c, c).to_owned())
}

/// Denoises `y` toward `x_ref` on the GFT `f`, building the offline state for `backend`.
pub fn denoise(
    y: &GraphSignal,
    x_ref: &GraphSignal,
    f: &GftMatrix,
    cfg: &DenoiseConfig,
    backend: Backend,
) -> Result<DenoiseResult> {
    cfg.validate()?;
    check_pair(y, x_ref, f.n())?;
    match backend {
        Backend::Exact => {
            let eig = eigendecompose_unitary(f)?;
            Denoiser::exact(&eig, y, x_ref, cfg.loss_on_real)?.run(cfg)
        }
        Backend::Fast => {
            let cache = build_power_cache_with_budget(f, cfg.l, DEFAULT_MEMORY_BUDGET)?;
            cache.verify(f)?;
            Denoiser::fast(&cache, y, x_ref, cfg.loss_on_real)?.run(cfg)
        }
    }
}
