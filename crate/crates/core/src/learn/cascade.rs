//! Cascaded order learning: `Ŷ = Q^{α_K} ⋯ Q^{α_1} X` fitted to `F^{α_target} X`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::graph::GftMatrix;
use crate::linalg::{self, CMat};
use crate::transform::{
    build_power_cache_with_budget, eigendecompose_unitary, exact_gfrft, exact_gfrft_grad,
    fgfrft_matrix_and_grad, PowerCache, UnitaryEigen,
};

use super::adam::AdamState;

/// Which operator family a learning run differentiates through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    /// `V diag(e^{jαθ}) V^H` from the eigendecomposition.
    Exact,
    /// Truncated series over the power cache.
    Fast,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Fast => "fast",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "fast" => Ok(Backend::Fast),
            other => Err(Error::Parameter(format!(
                "unknown backend {other:?}, expected \"exact\" or \"fast\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeConfig {
    /// Number of cascaded layers `K`.
    pub depth: usize,
    /// Initial order of every layer.
    pub init_order: f64,
    pub target_order: f64,
    /// Truncation order of the fast backend.
    pub l: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            depth: 1,
            init_order: 0.1,
            target_order: 1.5,
            l: 10,
            epochs: 200,
            lr: 0.01,
            seed: 0,
        }
    }
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::Parameter(
                "cascade depth K must be at least 1".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::Parameter("epochs must be at least 1".into()));
        }
        if self.l == 0 {
            return Err(Error::Parameter(
                "truncation order L must be at least 1".into(),
            ));
        }
        if !(self.lr > 0.0) || !self.init_order.is_finite() || !self.target_order.is_finite() {
            return Err(Error::Parameter(
                "learning rate must be positive and orders finite".into(),
            ));
        }
        Ok(())
    }
}

/// Loss and orders at the start of one epoch (before that epoch's update).
#[derive(Debug, Clone, PartialEq)]
pub struct OrderRecord {
    pub epoch: usize,
    pub loss: f64,
    pub alphas: Vec<f64>,
    pub sum: f64,
}

#[derive(Debug, Clone)]
pub struct CascadeRun {
    pub backend: Backend,
    pub trajectory: Vec<OrderRecord>,
    /// Orders after the last update.
    pub alphas: Vec<f64>,
    /// Loss at the final orders.
    pub loss: f64,
    pub sum: f64,
    /// Wall time of the optimization loop, excluding offline precomputation.
    pub wall_seconds: f64,
}

/// Offline state shared by both backends: the eigendecomposition (for the target
/// and the exact backend) and the power cache (for the fast backend).
pub struct OrderLearner {
    eig: UnitaryEigen,
    cache: PowerCache,
}

impl OrderLearner {
    pub fn new(f: &GftMatrix, l: usize, memory_budget: u64) -> Result<Self> {
        let cache = build_power_cache_with_budget(f, l, memory_budget)?;
        let eig = eigendecompose_unitary(f)?;
        Ok(Self { eig, cache })
    }

    pub fn from_parts(eig: UnitaryEigen, cache: PowerCache) -> Result<Self> {
        if eig.n() != cache.n() {
            return Err(Error::Shape(format!(
                "eigendecomposition has N={}, cache has N={}",
                eig.n(),
                cache.n()
            )));
        }
        Ok(Self { eig, cache })
    }

    pub fn n(&self) -> usize {
        self.eig.n()
    }

    pub fn l(&self) -> usize {
        self.cache.l()
    }

    /// `Y = F^{α_target} X` with `X = I`, always from the exact operator.
    pub fn target(&self, alpha_target: f64) -> CMat {
        exact_gfrft(&self.eig, alpha_target).into_matrix()
    }

    fn op_and_grad(&self, backend: Backend, alpha: f64) -> (CMat, CMat) {
        match backend {
            Backend::Exact => (
                exact_gfrft(&self.eig, alpha).into_matrix(),
                exact_gfrft_grad(&self.eig, alpha),
            ),
            Backend::Fast => {
                let (q, dq) = fgfrft_matrix_and_grad(&self.cache, alpha);
                (q.into_matrix(), dq)
            }
        }
    }

    /// `𝓛 = ‖Ŷ − Y‖_F² / N²` and `∂𝓛/∂α_l` by reverse accumulation through the product.
    pub fn loss_and_grad(&self, backend: Backend, alphas: &[f64], y: &CMat) -> (f64, Vec<f64>) {
        let n = self.n();
        let par = linalg::parallelism();
        let layers: Vec<(CMat, CMat)> = alphas
            .iter()
            .map(|&a| self.op_and_grad(backend, a))
            .collect();
        // inputs[l] = X^{(l)} = Q_l ⋯ Q_1, with X^{(0)} = I
        let mut inputs: Vec<CMat> = Vec::with_capacity(layers.len() + 1);
        inputs.push(CMat::identity(n, n));
        for (q, _) in &layers {
            let next = linalg::mul(q.as_ref(), inputs.last().expect("nonempty").as_ref(), par);
            inputs.push(next);
        }
        let residual = inputs.last().expect("nonempty") - y;
        let scale = 1.0 / (n * n) as f64;
        let loss = scale * linalg::frobenius(residual.as_ref()).powi(2);

        let mut grads = vec![0.0; layers.len()];
        let mut g = residual;
        for (idx, (q, dq)) in layers.iter().enumerate().rev() {
            let d = linalg::mul(dq.as_ref(), inputs[idx].as_ref(), par);
            let mut acc = 0.0;
            for j in 0..n {
                for i in 0..n {
                    let (gi, di) = (g[(i, j)], d[(i, j)]);
                    acc += gi.re * di.re + gi.im * di.im;
                }
            }
            grads[idx] = 2.0 * scale * acc;
            if idx > 0 {
                g = linalg::mul(q.adjoint(), g.as_ref(), par);
            }
        }
        (loss, grads)
    }

    pub fn loss(&self, backend: Backend, alphas: &[f64], y: &CMat) -> f64 {
        let n = self.n();
        let par = linalg::parallelism();
        let mut prod = CMat::identity(n, n);
        for &a in alphas {
            let (q, _) = self.op_and_grad(backend, a);
            prod = linalg::mul(q.as_ref(), prod.as_ref(), par);
        }
        linalg::frobenius((&prod - y).as_ref()).powi(2) / (n * n) as f64
    }

    pub fn run(&self, cfg: &CascadeConfig, backend: Backend) -> Result<CascadeRun> {
        cfg.validate()?;
        if backend == Backend::Fast && cfg.l != self.l() {
            return Err(Error::Parameter(format!(
                "config asks for L={}, cache was built with L={}",
                cfg.l,
                self.l()
            )));
        }
        let y = self.target(cfg.target_order);
        let start = Instant::now();
        let mut opt = AdamState::new(vec![cfg.init_order; cfg.depth], cfg.lr);
        let mut trajectory = Vec::with_capacity(cfg.epochs);
        for epoch in 1..=cfg.epochs {
            let (loss, grad) = self.loss_and_grad(backend, &opt.params, &y);
            if !loss.is_finite() {
                return Err(Error::Optimizer {
                    epoch,
                    index: 0,
                    what: format!("non-finite loss {loss}"),
                });
            }
            trajectory.push(OrderRecord {
                epoch,
                loss,
                alphas: opt.params.clone(),
                sum: opt.params.iter().sum(),
            });
            opt.update(&grad).map_err(|e| match e {
                Error::Optimizer { index, what, .. } => Error::Optimizer { epoch, index, what },
                other => other,
            })?;
        }
        let loss = self.loss(backend, &opt.params, &y);
        let wall_seconds = start.elapsed().as_secs_f64();
        Ok(CascadeRun {
            backend,
            trajectory,
            sum: opt.params.iter().sum(),
            alphas: opt.params,
            loss,
            wall_seconds,
        })
    }
}

/// Runs Adam on the cascade for `cfg.epochs` epochs, starting every layer at `cfg.init_order`.
pub fn learn_orders(f: &GftMatrix, cfg: &CascadeConfig, backend: Backend) -> Result<CascadeRun> {
    cfg.validate()?;
    let learner = OrderLearner::new(f, cfg.l, crate::transform::DEFAULT_MEMORY_BUDGET)?;
    learner.run(cfg, backend)
}
