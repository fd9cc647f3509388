//! Experiment drivers: accuracy sweeps, construction timing and order learning.
//!
//! Every record type serializes to CSV; all fields except wall-clock times are
//! deterministic functions of the configuration and seeds.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::time::{Duration, Instant};

use faer::{Mat, Par};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{Error, Result};
use crate::graph::{random_unitary, synthetic_unitary, GftMatrix, KroneckerUnitary};
use crate::learn::{Backend, CascadeConfig, OrderLearner};
use crate::linalg::{self, CMat};
use crate::metrics::matrix_errors;
use crate::transform::{
    build_power_cache_with_budget, eigendecompose_unitary, ensure_cache_fits, exact_gfrft,
    fgfrft_matrix_order, sinc_coeffs, PowerCache, UnitaryEigen, DEFAULT_MEMORY_BUDGET,
};

/// Orders used throughout the accuracy experiments.
pub const DEFAULT_ALPHAS: [f64; 5] = [0.15, 0.35, 0.55, 0.75, 0.95];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: usize,
    pub l: usize,
    pub alpha: f64,
    pub seed: u64,
    pub mse: f64,
    pub mae: f64,
    pub nmse: f64,
    pub build_time_fast: f64,
    pub build_time_exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub n: usize,
    pub l: usize,
    pub median_fast_seconds: f64,
    pub median_exact_seconds: f64,
    pub speedup: f64,
    pub repeats: usize,
    pub warmups: usize,
    /// Measurement-quality warning, empty when the measurement is sound.
    pub warning: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderLearningRow {
    pub k: usize,
    pub backend: String,
    pub seed: u64,
    pub final_loss: f64,
    pub sum_alpha: f64,
    pub abs_delta: f64,
    pub wall_seconds: f64,
    /// Exact-backend wall time divided by this row's wall time.
    pub speedup: f64,
}

/// Writes records as CSV with a header row.
pub fn write_csv<T: Serialize, W: Write>(out: W, records: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)
            .map_err(|e| Error::Parameter(format!("CSV serialization failed: {e}")))?;
    }
    w.flush()
        .map_err(|e| Error::Parameter(format!("CSV write failed: {e}")))?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned, R: Read>(input: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(|e| Error::Parameter(format!("CSV parse failed: {e}"))))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    pub alpha_list: Vec<f64>,
    pub l_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub memory_budget: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_list: vec![2000, 3000, 4000],
            alpha_list: DEFAULT_ALPHAS.to_vec(),
            l_list: vec![10, 20, 30],
            seeds: vec![0],
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

fn require_nonempty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(Error::Parameter(format!("{name} must not be empty")))
    } else {
        Ok(())
    }
}

/// Errors of `Q_L^α` against `F^α` on Haar-random unitaries.
///
/// Records are ordered by `N`, seed, `α`, then `L`. The cache is built once per
/// `(N, seed)` at the largest `L`; every `(N, L_max)` pair is checked against
/// the memory budget before any work starts.
pub fn accuracy_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    require_nonempty("n_list", &cfg.n_list)?;
    require_nonempty("alpha_list", &cfg.alpha_list)?;
    require_nonempty("l_list", &cfg.l_list)?;
    require_nonempty("seeds", &cfg.seeds)?;
    if cfg.l_list.contains(&0) {
        return Err(Error::Parameter(
            "truncation orders must be at least 1".into(),
        ));
    }
    let l_max = *cfg.l_list.iter().max().expect("nonempty");
    for &n in &cfg.n_list {
        ensure_cache_fits(n, l_max, false, cfg.memory_budget)?;
    }
    let mut records = Vec::new();
    for &n in &cfg.n_list {
        for &seed in &cfg.seeds {
            let f = random_unitary(n, seed)?;
            let eig = eigendecompose_unitary(&f)?;
            let cache = build_power_cache_with_budget(&f, l_max, cfg.memory_budget)?;
            drop(f);
            for &alpha in &cfg.alpha_list {
                let t = Instant::now();
                let exact = exact_gfrft(&eig, alpha);
                let build_time_exact = t.elapsed().as_secs_f64();
                for &l in &cfg.l_list {
                    let t = Instant::now();
                    let q = fgfrft_matrix_order(&cache, alpha, l)?;
                    let build_time_fast = t.elapsed().as_secs_f64();
                    let e = matrix_errors(q.matrix().as_ref(), exact.matrix().as_ref())?;
                    records.push(SweepRecord {
                        n,
                        l,
                        alpha,
                        seed,
                        mse: e.mse,
                        mae: e.mae,
                        nmse: e.nmse,
                        build_time_fast,
                        build_time_exact,
                    });
                }
            }
        }
    }
    Ok(records)
}

/// Test matrix used for timing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingMatrix {
    /// `A ⊗ B` of two Haar factors: dense and unitary, with `O(N²)` offline cost.
    Kronecker,
    /// A full Haar-random unitary (offline eigendecomposition is `O(N³)`).
    Haar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingConfig {
    pub n_list: Vec<usize>,
    pub l: usize,
    pub repeats: usize,
    pub warmups: usize,
    pub alpha: f64,
    pub seed: u64,
    pub matrix: TimingMatrix,
    pub memory_budget: u64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            n_list: vec![1000, 2000, 3000, 4000],
            l: 10,
            repeats: 5,
            warmups: 1,
            alpha: 0.55,
            seed: 0,
            matrix: TimingMatrix::Kronecker,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Smallest observable nonzero step of the monotonic clock.
pub fn timer_resolution() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..200 {
        let a = Instant::now();
        let mut b = Instant::now();
        while b == a {
            b = Instant::now();
        }
        best = best.min(b - a);
    }
    best
}

fn time_repeated(warmups: usize, repeats: usize, mut run: impl FnMut()) -> Vec<f64> {
    for _ in 0..warmups {
        run();
    }
    (0..repeats)
        .map(|_| {
            let t = Instant::now();
            run();
            t.elapsed().as_secs_f64()
        })
        .collect()
}

/// Online exact construction `V (Σ^α V^H)`: diagonal scaling plus one dense product.
fn exact_online(eig: &UnitaryEigen, alpha: f64) -> CMat {
    let v = eig.v();
    let n = v.nrows();
    let d: Vec<c64> = eig.theta().iter().map(|&t| c64::cis(alpha * t)).collect();
    let scaled = Mat::from_fn(n, n, |i, j| d[i] * v[(j, i)].conj());
    linalg::mul(v.as_ref(), scaled.as_ref(), Par::Seq)
}

/// Online fast construction: coefficient evaluation plus the weighted sum of cached powers.
fn fast_online(cache: &PowerCache, alpha: f64) -> CMat {
    let s = sinc_coeffs(alpha, cache.l());
    cache.combine(&[&s.c]).pop().expect("one weight set")
}

/// Median online construction times of the exact and fast operators.
///
/// Offline artifacts (eigendecomposition, power cache) are prepared before
/// timing; timed sections run single-threaded.
pub fn timing_benchmark(cfg: &TimingConfig) -> Result<Vec<TimingRecord>> {
    require_nonempty("n_list", &cfg.n_list)?;
    if cfg.repeats == 0 {
        return Err(Error::Parameter("repeats must be at least 1".into()));
    }
    for &n in &cfg.n_list {
        ensure_cache_fits(n, cfg.l, false, cfg.memory_budget)?;
    }
    let resolution = timer_resolution().as_secs_f64();
    let mut records = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let (eig, cache) = match cfg.matrix {
            TimingMatrix::Kronecker => {
                let k = KroneckerUnitary::random_of_size(n, cfg.seed)?;
                let f = k.to_gft()?;
                let cache = PowerCache::from_kronecker(&k, &f, cfg.l, cfg.memory_budget)?;
                (eigendecompose_unitary(&f)?, cache)
            }
            TimingMatrix::Haar => {
                let f = random_unitary(n, cfg.seed)?;
                let cache = build_power_cache_with_budget(&f, cfg.l, cfg.memory_budget)?;
                (eigendecompose_unitary(&f)?, cache)
            }
        };
        let (fast, exact) = linalg::with_sequential(|| {
            let fast = time_repeated(cfg.warmups, cfg.repeats, || {
                std::hint::black_box(fast_online(&cache, cfg.alpha));
            });
            let exact = time_repeated(cfg.warmups, cfg.repeats, || {
                std::hint::black_box(exact_online(&eig, cfg.alpha));
            });
            (fast, exact)
        });
        let (mf, me) = (median(fast), median(exact));
        let mut warnings = Vec::new();
        if cfg.repeats < 3 {
            warnings.push(format!(
                "only {} repeats; medians are unreliable",
                cfg.repeats
            ));
        }
        if cfg.warmups < 1 {
            warnings.push("no warmup runs".to_string());
        }
        if resolution > 0.01 * mf.min(me) {
            warnings.push(format!(
                "timer resolution {resolution:.3e}s exceeds 1% of the measured interval"
            ));
        }
        let warning = warnings.join("; ");
        if !warning.is_empty() {
            log::warn!("N={n}: {warning}");
        }
        records.push(TimingRecord {
            n,
            l: cfg.l,
            median_fast_seconds: mf,
            median_exact_seconds: me,
            speedup: me / mf,
            repeats: cfg.repeats,
            warmups: cfg.warmups,
            warning,
        });
    }
    Ok(records)
}

/// Spectrum of the unitary used for order learning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumKind {
    /// Haar-random unitary: phases fill the whole circle.
    Haar,
    /// Haar eigenvectors with phases uniform in `[−π + margin, π − margin]`.
    Margin(f64),
}

/// Unitary for learning experiments, deterministic in `seed`.
pub fn experiment_unitary(n: usize, spectrum: SpectrumKind, seed: u64) -> Result<GftMatrix> {
    match spectrum {
        SpectrumKind::Haar => random_unitary(n, seed),
        SpectrumKind::Margin(m) => {
            if !(0.0..PI).contains(&m) {
                return Err(Error::Parameter(format!("phase margin {m} outside [0, π)")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
            let hi = PI - m;
            let phases: Vec<f64> = (0..n).map(|_| rng.random_range(-hi..=hi)).collect();
            synthetic_unitary(&phases, seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderExperimentConfig {
    pub k_list: Vec<usize>,
    pub target: f64,
    pub init: f64,
    pub epochs: usize,
    pub lr: f64,
    pub n: usize,
    pub l: usize,
    pub seeds: Vec<u64>,
    pub spectrum: SpectrumKind,
    pub memory_budget: u64,
}

impl Default for OrderExperimentConfig {
    fn default() -> Self {
        Self {
            k_list: vec![1, 2, 3],
            target: 1.5,
            init: 0.1,
            epochs: 200,
            lr: 0.01,
            n: 128,
            l: 10,
            seeds: vec![0],
            spectrum: SpectrumKind::Margin(0.1 * PI),
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

/// Runs cascaded order learning with both backends for every depth and seed.
pub fn order_learning_experiment(cfg: &OrderExperimentConfig) -> Result<Vec<OrderLearningRow>> {
    require_nonempty("k_list", &cfg.k_list)?;
    require_nonempty("seeds", &cfg.seeds)?;
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let f = experiment_unitary(cfg.n, cfg.spectrum, seed)?;
        let learner = OrderLearner::new(&f, cfg.l, cfg.memory_budget)?;
        for &k in &cfg.k_list {
            let cc = CascadeConfig {
                depth: k,
                init_order: cfg.init,
                target_order: cfg.target,
                l: cfg.l,
                epochs: cfg.epochs,
                lr: cfg.lr,
                seed,
            };
            let exact = learner.run(&cc, Backend::Exact)?;
            let fast = learner.run(&cc, Backend::Fast)?;
            for run in [&exact, &fast] {
                rows.push(OrderLearningRow {
                    k,
                    backend: run.backend.to_string(),
                    seed,
                    final_loss: run.loss,
                    sum_alpha: run.sum,
                    abs_delta: (run.sum - cfg.target).abs(),
                    wall_seconds: run.wall_seconds,
                    speedup: exact.wall_seconds / run.wall_seconds,
                });
            }
        }
    }
    Ok(rows)
}
