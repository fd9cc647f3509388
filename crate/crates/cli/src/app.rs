//! Command-line definitions and command implementations.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{
    ArgAction, ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum,
};
use fgfrft::bench::{
    accuracy_sweep, experiment_unitary, timing_benchmark, SpectrumKind, SweepConfig, TimingConfig,
    TimingMatrix,
};
use fgfrft::learn::{Backend, CascadeConfig, OrderLearner};
use fgfrft::Normalization;
use serde::Serialize;

use crate::error::{exit, read_file, write_file, CliError, CliResult};
use crate::manifest::RunManifest;
use crate::pgm::Pgm;
use crate::pipeline::{denoise_cloud, denoise_image, CloudOptions, DenoiseOptions, MetricsRow};
use crate::{synth, xyz};

#[derive(Debug, Parser)]
#[command(
    name = "fgfrft",
    version,
    about = "Fast graph fractional Fourier transform toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Approximation error of the fast operator over N, α and L.
    Sweep(SweepArgs),
    /// Online construction time of the fast and exact operators.
    Bench(BenchArgs),
    /// Learn cascaded transform orders toward a target order.
    LearnOrder(LearnOrderArgs),
    /// Denoise an 8-bit PGM image patch by patch.
    DenoiseImage(DenoiseImageArgs),
    /// Denoise an XYZ point cloud batch by batch.
    DenoiseCloud(DenoiseCloudArgs),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
    /// Write the synthetic smooth test image.
    GenImage(GenImageArgs),
    /// Write the synthetic plane point cloud.
    GenCloud(GenCloudArgs),
}

/// Parses byte counts such as `1048576`, `512M`, `4GiB`.
pub fn parse_bytes(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let split = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
    let (digits, unit) = t.split_at(split);
    let value: u64 = digits
        .parse()
        .map_err(|_| format!("invalid byte count {s:?}"))?;
    let shift = match unit.trim().to_ascii_lowercase().as_str() {
        "" | "b" => 0,
        "k" | "kb" | "kib" => 10,
        "m" | "mb" | "mib" => 20,
        "g" | "gb" | "gib" => 30,
        "t" | "tb" | "tib" => 40,
        other => return Err(format!("unknown byte unit {other:?}")),
    };
    value
        .checked_mul(1u64 << shift)
        .ok_or_else(|| format!("byte count {s:?} overflows"))
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Upper bound on cached matrix powers (bytes; K/M/G/T suffixes allowed).
    #[arg(long, default_value = "4GiB", value_parser = parse_bytes)]
    pub memory_budget: u64,
    /// Write CSV outputs only: no summary on stdout and no image or cloud files.
    #[arg(long)]
    pub csv_only: bool,
    /// Worker threads for untimed dense kernels (0 keeps the library default).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "2000,3000,4000")]
    pub n_list: Vec<usize>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.15,0.35,0.55,0.75,0.95"
    )]
    pub alpha_list: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "10,20,30")]
    pub l_list: Vec<usize>,
    /// Random-matrix seeds (defaults to --seed).
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatrixArg {
    Kronecker,
    Haar,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,3000,4000")]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub l: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 1)]
    pub warmups: usize,
    #[arg(long, default_value_t = 0.55)]
    pub alpha: f64,
    /// Test matrix: Kronecker product of Haar factors, or a full Haar unitary.
    #[arg(long, value_enum, default_value = "kronecker")]
    pub matrix: MatrixArg,
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Exact,
    Fast,
    Both,
}

impl BackendArg {
    fn backends(self) -> Vec<Backend> {
        match self {
            BackendArg::Exact => vec![Backend::Exact],
            BackendArg::Fast => vec![Backend::Fast],
            BackendArg::Both => vec![Backend::Exact, Backend::Fast],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpectrumArg {
    Haar,
    Margin,
}

#[derive(Debug, Clone, Args)]
pub struct LearnOrderArgs {
    /// Cascade depths.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 1.5)]
    pub target: f64,
    #[arg(long, default_value_t = 0.1)]
    pub init: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub l: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub backend: BackendArg,
    /// Haar-random unitary, or Haar eigenvectors with phases kept off ±π.
    #[arg(long, value_enum, default_value = "margin")]
    pub spectrum: SpectrumArg,
    /// Phase margin as a fraction of π (for --spectrum margin).
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
    /// Per-epoch trajectory CSV.
    #[arg(long, default_value = "learn_order.csv")]
    pub out: PathBuf,
    /// One summary row per (depth, backend).
    #[arg(long, default_value = "learn_order_summary.csv")]
    pub summary: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Combinatorial,
    Symmetric,
    Adjacency,
}

impl From<NormalizationArg> for Normalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::Combinatorial => Normalization::CombinatorialLaplacian,
            NormalizationArg::Symmetric => Normalization::SymmetricNormalizedLaplacian,
            NormalizationArg::Adjacency => Normalization::Adjacency,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SingleBackend {
    Exact,
    Fast,
}

impl From<SingleBackend> for Backend {
    fn from(b: SingleBackend) -> Self {
        match b {
            SingleBackend::Exact => Backend::Exact,
            SingleBackend::Fast => Backend::Fast,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DenoiseFlags {
    #[arg(long, default_value_t = 20.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 10)]
    pub l: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha_init: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, value_enum, default_value = "fast")]
    pub backend: SingleBackend,
    /// Graph shift operator.
    #[arg(long, value_enum, default_value = "combinatorial")]
    pub normalization: NormalizationArg,
    /// Penalize only the real part of the reconstruction error.
    #[arg(long)]
    pub loss_on_real: bool,
}

impl DenoiseFlags {
    fn options(&self, epochs: usize, common: &Common) -> DenoiseOptions {
        DenoiseOptions {
            sigma: self.sigma,
            epochs,
            l: self.l,
            alpha_init: self.alpha_init,
            lr: self.lr,
            backend: self.backend.into(),
            normalization: self.normalization.into(),
            loss_on_real: self.loss_on_real,
            seed: common.seed,
            memory_budget: common.memory_budget,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DenoiseImageArgs {
    /// Binary PGM input (defaults to the synthetic 64×64 smooth image).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub patch: usize,
    #[command(flatten)]
    pub denoise: DenoiseFlags,
    #[arg(long, default_value = "denoised.pgm")]
    pub out: PathBuf,
    /// Also write the noisy input image.
    #[arg(long)]
    pub noisy_out: Option<PathBuf>,
    #[arg(long, default_value = "denoise_image.csv")]
    pub metrics: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphSource {
    Noisy,
    Clean,
}

#[derive(Debug, Clone, Args)]
pub struct DenoiseCloudArgs {
    /// ASCII XYZ input (defaults to the synthetic 4000-point plane).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    pub k: usize,
    #[arg(long, default_value_t = 4000)]
    pub batch: usize,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    /// Optional voxel size for downsampling before batching.
    #[arg(long)]
    pub voxel: Option<f64>,
    /// Coordinates the k-NN graph is built from.
    #[arg(long, value_enum, default_value = "noisy")]
    pub graph_from: GraphSource,
    /// PSNR peak (defaults to the clean cloud's largest per-axis range).
    #[arg(long)]
    pub peak: Option<f64>,
    #[command(flatten)]
    pub denoise: DenoiseFlags,
    #[arg(long, default_value = "denoised.xyz")]
    pub out: PathBuf,
    #[arg(long)]
    pub noisy_out: Option<PathBuf>,
    #[arg(long, default_value = "denoise_cloud.csv")]
    pub metrics: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Redirect every output file into this directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenImageArgs {
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value = "smooth64.pgm")]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct GenCloudArgs {
    #[arg(long, default_value_t = 4000)]
    pub points: usize,
    #[arg(long, default_value = "plane4000.xyz")]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

/// Flags whose values are output paths (rewritten by `replay --out-dir`).
const OUTPUT_FLAGS: [&str; 4] = ["out", "summary", "metrics", "noisy-out"];

fn csv_bytes<T: Serialize>(rows: &[T]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    fgfrft::bench::write_csv(&mut buf, rows)?;
    Ok(buf)
}

/// Collects the effective flag set of the parsed subcommand, defaults included.
fn flag_set(name: &str, matches: &ArgMatches) -> Vec<(String, String)> {
    let root = Cli::command();
    let cmd = root
        .find_subcommand(name)
        .expect("parsed subcommand exists");
    let mut flags = Vec::new();
    for arg in cmd.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        let Ok(Some(raw)) = matches.try_get_raw(arg.get_id().as_str()) else {
            continue;
        };
        let values: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
        flags.push((long.to_string(), values.join(",")));
    }
    flags
}

/// Command line equivalent to a recorded flag set.
fn replay_argv(m: &RunManifest, out_dir: Option<&Path>) -> CliResult<Vec<OsString>> {
    let root = Cli::command();
    let cmd = root.find_subcommand(&m.command).ok_or_else(|| {
        CliError::Usage(format!("manifest names unknown command {:?}", m.command))
    })?;
    if m.command == "replay" {
        return Err(CliError::Usage(
            "a replay manifest cannot be replayed".into(),
        ));
    }
    let mut argv: Vec<OsString> = vec!["fgfrft".into(), m.command.clone().into()];
    for (name, value) in &m.flags {
        let arg = cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(name.as_str()))
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "manifest flag --{name} is not accepted by {}",
                    m.command
                ))
            })?;
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            if value == "true" {
                argv.push(format!("--{name}").into());
            }
            continue;
        }
        let value = match out_dir {
            Some(dir) if OUTPUT_FLAGS.contains(&name.as_str()) => {
                let file = Path::new(value).file_name().ok_or_else(|| {
                    CliError::Usage(format!("output flag --{name} has no file name"))
                })?;
                dir.join(file).into_os_string()
            }
            _ => value.into(),
        };
        argv.push(format!("--{name}").into());
        argv.push(value);
    }
    Ok(argv)
}

struct Run<'a> {
    name: &'a str,
    flags: Vec<(String, String)>,
    common: &'a Common,
    outputs: Vec<PathBuf>,
}

impl Run<'_> {
    fn write(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        write_file(path, bytes)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.common.csv_only {
            println!("{}", line.as_ref());
        }
    }

    /// Writes the manifest next to `primary`.
    fn finish(self, primary: &Path) -> CliResult<()> {
        let manifest = RunManifest {
            command: self.name.to_string(),
            flags: self.flags,
            seed: self.common.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            outputs: self.outputs,
        };
        write_file(
            &RunManifest::path_for(primary),
            manifest.to_text().as_bytes(),
        )
    }
}

#[derive(Serialize)]
struct SweepRow {
    n: usize,
    l: usize,
    alpha: f64,
    seed: u64,
    mse: f64,
    mae: f64,
    nmse: f64,
}

#[derive(Serialize)]
struct BenchRow {
    n: usize,
    l: usize,
    fast_s: f64,
    exact_s: f64,
    speedup: f64,
    repeats: usize,
}

#[derive(Serialize)]
struct TrajectoryRow {
    backend: &'static str,
    k: usize,
    epoch: usize,
    loss: f64,
    sum: f64,
    /// `;`-separated per-layer orders.
    alphas: String,
}

#[derive(Serialize)]
struct SummaryRow {
    k: usize,
    backend: &'static str,
    seed: u64,
    final_loss: f64,
    sum_alpha: f64,
    abs_delta: f64,
    wall_seconds: f64,
    /// Exact wall time over this row's wall time (when both backends ran).
    speedup: Option<f64>,
}

fn cmd_sweep(a: &SweepArgs, mut run: Run) -> CliResult<()> {
    let cfg = SweepConfig {
        n_list: a.n_list.clone(),
        alpha_list: a.alpha_list.clone(),
        l_list: a.l_list.clone(),
        seeds: a.seeds.clone().unwrap_or_else(|| vec![a.common.seed]),
        memory_budget: a.common.memory_budget,
    };
    let records = accuracy_sweep(&cfg).map_err(|e| match e {
        fgfrft::Error::Capacity(msg) => CliError::Core(fgfrft::Error::Capacity(format!(
            "{msg}; raise --memory-budget or shrink --l-list"
        ))),
        other => other.into(),
    })?;
    let rows: Vec<SweepRow> = records
        .iter()
        .map(|r| SweepRow {
            n: r.n,
            l: r.l,
            alpha: r.alpha,
            seed: r.seed,
            mse: r.mse,
            mae: r.mae,
            nmse: r.nmse,
        })
        .collect();
    run.write(&a.out, &csv_bytes(&rows)?)?;
    for r in &records {
        run.say(format!(
            "N={:<5} L={:<3} alpha={:<5} seed={} NMSE={:.3e} MAE={:.3e} fast={:.3}s exact={:.3}s",
            r.n, r.l, r.alpha, r.seed, r.nmse, r.mae, r.build_time_fast, r.build_time_exact
        ));
    }
    run.finish(&a.out)
}

fn cmd_bench(a: &BenchArgs, mut run: Run) -> CliResult<()> {
    let cfg = TimingConfig {
        n_list: a.n_list.clone(),
        l: a.l,
        repeats: a.repeats,
        warmups: a.warmups,
        alpha: a.alpha,
        seed: a.common.seed,
        matrix: match a.matrix {
            MatrixArg::Kronecker => TimingMatrix::Kronecker,
            MatrixArg::Haar => TimingMatrix::Haar,
        },
        memory_budget: a.common.memory_budget,
    };
    let records = timing_benchmark(&cfg)?;
    let rows: Vec<BenchRow> = records
        .iter()
        .map(|r| BenchRow {
            n: r.n,
            l: r.l,
            fast_s: r.median_fast_seconds,
            exact_s: r.median_exact_seconds,
            speedup: r.speedup,
            repeats: r.repeats,
        })
        .collect();
    run.write(&a.out, &csv_bytes(&rows)?)?;
    for r in &records {
        if !r.warning.is_empty() {
            eprintln!("warning: N={}: {}", r.n, r.warning);
        }
        run.say(format!(
            "N={:<5} L={} fast={:.4}s exact={:.4}s speedup={:.2}x",
            r.n, r.l, r.median_fast_seconds, r.median_exact_seconds, r.speedup
        ));
    }
    run.finish(&a.out)
}

fn cmd_learn_order(a: &LearnOrderArgs, mut run: Run) -> CliResult<()> {
    let spectrum = match a.spectrum {
        SpectrumArg::Haar => SpectrumKind::Haar,
        SpectrumArg::Margin => SpectrumKind::Margin(a.margin * std::f64::consts::PI),
    };
    let f = experiment_unitary(a.n, spectrum, a.common.seed)?;
    let learner = OrderLearner::new(&f, a.l, a.common.memory_budget)?;
    drop(f);
    let mut trajectory = Vec::new();
    let mut summary = Vec::new();
    for &k in &a.k {
        let cfg = CascadeConfig {
            depth: k,
            init_order: a.init,
            target_order: a.target,
            l: a.l,
            epochs: a.epochs,
            lr: a.lr,
            seed: a.common.seed,
        };
        let runs = a
            .backend
            .backends()
            .into_iter()
            .map(|b| learner.run(&cfg, b))
            .collect::<Result<Vec<_>, _>>()?;
        let exact_wall = runs
            .iter()
            .find(|r| r.backend == Backend::Exact)
            .map(|r| r.wall_seconds);
        for r in &runs {
            let name = r.backend.name();
            trajectory.extend(r.trajectory.iter().map(|t| {
                TrajectoryRow {
                    backend: name,
                    k,
                    epoch: t.epoch,
                    loss: t.loss,
                    sum: t.sum,
                    alphas: t
                        .alphas
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(";"),
                }
            }));
            let speedup = exact_wall
                .filter(|_| runs.len() > 1)
                .map(|w| w / r.wall_seconds);
            summary.push(SummaryRow {
                k,
                backend: name,
                seed: a.common.seed,
                final_loss: r.loss,
                sum_alpha: r.sum,
                abs_delta: (r.sum - a.target).abs(),
                wall_seconds: r.wall_seconds,
                speedup,
            });
            run.say(format!(
                "K={k} {name:<5} loss={:.3e} sum={:.5} |delta|={:.2e} wall={:.2}s",
                r.loss,
                r.sum,
                (r.sum - a.target).abs(),
                r.wall_seconds
            ));
        }
    }
    run.write(&a.out, &csv_bytes(&trajectory)?)?;
    run.write(&a.summary, &csv_bytes(&summary)?)?;
    run.finish(&a.out)
}

fn report_rows(run: &Run, rows: &[MetricsRow], wall: f64) {
    let s = rows.last().expect("summary row");
    let ssim = match (s.ssim_noisy, s.ssim_denoised) {
        (Some(a), Some(b)) => format!(" SSIM {a:.4} -> {b:.4}"),
        _ => String::new(),
    };
    run.say(format!(
        "PSNR {:.2} dB -> {:.2} dB{ssim} ({} units, {wall:.1}s)",
        s.psnr_noisy_db,
        s.psnr_denoised_db,
        rows.len() - 1
    ));
}

fn cmd_denoise_image(a: &DenoiseImageArgs, mut run: Run) -> CliResult<()> {
    let img = match &a.input {
        Some(p) => Pgm::parse(&read_file(p)?).map_err(|source| CliError::Pgm {
            path: p.clone(),
            source,
        })?,
        None => synth::smooth_image(64),
    };
    let report = denoise_image(&img, a.patch, &a.denoise.options(a.epochs, &a.common))?;
    run.write(&a.metrics, &csv_bytes(&report.rows)?)?;
    if !a.common.csv_only {
        run.write(&a.out, &report.denoised.to_bytes())?;
        if let Some(p) = &a.noisy_out {
            run.write(p, &report.noisy.to_bytes())?;
        }
    }
    report_rows(&run, &report.rows, report.wall_seconds);
    run.finish(&a.metrics)
}

fn cmd_denoise_cloud(a: &DenoiseCloudArgs, mut run: Run) -> CliResult<()> {
    let mut points = match &a.input {
        Some(p) => {
            let text = String::from_utf8(read_file(p)?).map_err(|e| {
                CliError::io(p, std::io::Error::new(std::io::ErrorKind::InvalidData, e))
            })?;
            xyz::parse(&text).map_err(|source| CliError::Xyz {
                path: p.clone(),
                source,
            })?
        }
        None => synth::plane_cloud(4000, a.common.seed),
    };
    if let Some(size) = a.voxel {
        if !(size > 0.0) {
            return Err(CliError::Usage(format!(
                "voxel size must be positive, got {size}"
            )));
        }
        points = xyz::voxel_downsample(&points, size);
    }
    let opts = CloudOptions {
        k: a.k,
        batch: a.batch,
        graph_from_clean: a.graph_from == GraphSource::Clean,
        peak: a.peak,
        denoise: a.denoise.options(a.epochs, &a.common),
    };
    let report = denoise_cloud(&points, &opts)?;
    run.write(&a.metrics, &csv_bytes(&report.rows)?)?;
    if !a.common.csv_only {
        run.write(&a.out, xyz::format(&report.denoised).as_bytes())?;
        if let Some(p) = &a.noisy_out {
            run.write(p, xyz::format(&report.noisy).as_bytes())?;
        }
    }
    report_rows(&run, &report.rows, report.wall_seconds);
    run.finish(&a.metrics)
}

fn cmd_gen_image(a: &GenImageArgs, mut run: Run) -> CliResult<()> {
    if a.size < 2 {
        return Err(CliError::Usage("image size must be at least 2".into()));
    }
    run.write(&a.out, &synth::smooth_image(a.size).to_bytes())?;
    run.say(format!("wrote {}", a.out.display()));
    run.finish(&a.out)
}

fn cmd_gen_cloud(a: &GenCloudArgs, mut run: Run) -> CliResult<()> {
    run.write(
        &a.out,
        xyz::format(&synth::plane_cloud(a.points, a.common.seed)).as_bytes(),
    )?;
    run.say(format!("wrote {}", a.out.display()));
    run.finish(&a.out)
}

fn cmd_replay(a: &ReplayArgs) -> CliResult<()> {
    let text = String::from_utf8(read_file(&a.manifest)?).map_err(|e| {
        CliError::io(
            &a.manifest,
            std::io::Error::new(std::io::ErrorKind::InvalidData, e),
        )
    })?;
    let manifest = RunManifest::parse(&text, &a.manifest)?;
    if manifest.version != env!("CARGO_PKG_VERSION") {
        log::warn!(
            "manifest was written by version {}, replaying with {}",
            manifest.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let argv = replay_argv(&manifest, a.out_dir.as_deref())?;
    let matches = Cli::command()
        .try_get_matches_from(argv)
        .map_err(|e| CliError::Usage(format!("manifest flags no longer parse: {e}")))?;
    dispatch(&matches)
}

fn dispatch(matches: &ArgMatches) -> CliResult<()> {
    let cli = Cli::from_arg_matches(matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let run = |common| Run {
        name,
        flags: flag_set(name, sub),
        common,
        outputs: Vec::new(),
    };
    let common = match &cli.command {
        Command::Sweep(a) => &a.common,
        Command::Bench(a) => &a.common,
        Command::LearnOrder(a) => &a.common,
        Command::DenoiseImage(a) => &a.common,
        Command::DenoiseCloud(a) => &a.common,
        Command::GenImage(a) => &a.common,
        Command::GenCloud(a) => &a.common,
        Command::Replay(a) => return cmd_replay(a),
    };
    if common.threads > 0 {
        fgfrft::linalg::set_threads(common.threads);
    }
    match &cli.command {
        Command::Sweep(a) => cmd_sweep(a, run(common)),
        Command::Bench(a) => cmd_bench(a, run(common)),
        Command::LearnOrder(a) => cmd_learn_order(a, run(common)),
        Command::DenoiseImage(a) => cmd_denoise_image(a, run(common)),
        Command::DenoiseCloud(a) => cmd_denoise_cloud(a, run(common)),
        Command::GenImage(a) => cmd_gen_image(a, run(common)),
        Command::GenCloud(a) => cmd_gen_cloud(a, run(common)),
        Command::Replay(_) => unreachable!("handled above"),
    }
}

/// Parses `args` (including the program name), runs the command, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::USAGE
            } else {
                exit::SUCCESS
            };
        }
    };
    match dispatch(&matches) {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_counts() {
        assert_eq!(parse_bytes("4GiB").unwrap(), 4 << 30);
        assert_eq!(parse_bytes("512m").unwrap(), 512 << 20);
        assert_eq!(parse_bytes("1000").unwrap(), 1000);
        assert!(parse_bytes("12 parsecs").is_err());
        assert!(parse_bytes("99999999999T").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flag_set_includes_defaults_and_replays() {
        let argv = ["fgfrft", "sweep", "--n-list", "8,16", "--csv-only"];
        let m = Cli::command().try_get_matches_from(argv).unwrap();
        let (name, sub) = m.subcommand().unwrap();
        let flags = flag_set(name, sub);
        let get = |k: &str| flags.iter().find(|(n, _)| n == k).map(|(_, v)| v.as_str());
        assert_eq!(get("n-list"), Some("8,16"));
        assert_eq!(get("l-list"), Some("10,20,30"));
        assert_eq!(get("csv-only"), Some("true"));
        assert_eq!(get("seeds"), None);

        let manifest = RunManifest {
            command: name.into(),
            flags,
            seed: 0,
            version: "x".into(),
            timestamp: 0,
            outputs: vec![],
        };
        let argv = replay_argv(&manifest, Some(Path::new("elsewhere"))).unwrap();
        let again = Cli::command().try_get_matches_from(argv).unwrap();
        let Command::Sweep(a) = Cli::from_arg_matches(&again).unwrap().command else {
            panic!("not a sweep")
        };
        assert_eq!(a.n_list, vec![8, 16]);
        assert!(a.common.csv_only);
        assert_eq!(a.out, Path::new("elsewhere").join("sweep.csv"));
    }
}
