//! Image and point-cloud denoising pipelines shared by the commands.

use std::f64::consts::PI;
use std::time::Instant;

use fgfrft::learn::{add_gaussian_noise, Backend, DenoiseConfig, Denoiser};
use fgfrft::metrics::{cloud_peak, psnr, ssim, Image, SSIM_WINDOW};
use fgfrft::transform::build_power_cache_with_budget;
use fgfrft::{
    build_grid_graph, build_knn_graph, eigendecompose_unitary, gft_from_shift, shift_operator,
    GftMatrix, GraphSignal, Normalization, PowerCache, UnitaryEigen,
};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::patches::ImagePatchSet;
use crate::pgm::Pgm;

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseOptions {
    pub sigma: f64,
    pub epochs: usize,
    pub l: usize,
    pub alpha_init: f64,
    pub lr: f64,
    pub backend: Backend,
    pub normalization: Normalization,
    pub loss_on_real: bool,
    pub seed: u64,
    pub memory_budget: u64,
}

impl DenoiseOptions {
    fn config(&self) -> DenoiseConfig {
        DenoiseConfig {
            l: self.l,
            epochs: self.epochs,
            lr: self.lr,
            alpha_init: self.alpha_init,
            sigma: self.sigma,
            seed: self.seed,
            loss_on_real: self.loss_on_real,
        }
    }
}

/// One row of a denoising metrics CSV: a patch, a batch, or the whole input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub unit: String,
    pub alpha: Option<f64>,
    pub loss: Option<f64>,
    pub psnr_noisy_db: f64,
    pub psnr_denoised_db: f64,
    pub ssim_noisy: Option<f64>,
    pub ssim_denoised: Option<f64>,
}

/// Offline state for one GFT matrix.
enum Offline {
    Exact(UnitaryEigen),
    Fast(PowerCache),
}

impl Offline {
    fn build(f: &GftMatrix, opts: &DenoiseOptions) -> CliResult<Self> {
        Ok(match opts.backend {
            Backend::Exact => {
                let eig = eigendecompose_unitary(f)?;
                let margin = eig.theta().iter().map(|t| PI - t.abs()).fold(PI, f64::min);
                if margin < fgfrft::graph::PHASE_MARGIN_WARN {
                    log::warn!("GFT phase margin {margin:.2e} is small; the truncated series converges slowly");
                }
                Offline::Exact(eig)
            }
            Backend::Fast => Offline::Fast(build_power_cache_with_budget(
                f,
                opts.l,
                opts.memory_budget,
            )?),
        })
    }

    fn denoiser<'a>(
        &'a self,
        y: &GraphSignal,
        x: &GraphSignal,
        real: bool,
    ) -> CliResult<Denoiser<'a>> {
        Ok(match self {
            Offline::Exact(e) => Denoiser::exact(e, y, x, real)?,
            Offline::Fast(c) => Denoiser::fast(c, y, x, real)?,
        })
    }
}

pub struct ImageReport {
    pub noisy: Pgm,
    pub denoised: Pgm,
    pub rows: Vec<MetricsRow>,
    pub wall_seconds: f64,
}

impl ImageReport {
    /// The whole-image row (always last).
    pub fn summary(&self) -> &MetricsRow {
        self.rows.last().expect("summary row")
    }
}

fn image_metrics(
    unit: String,
    clean: &[f64],
    noisy: &[f64],
    out: &[f64],
    side: (usize, usize),
) -> CliResult<MetricsRow> {
    let peak = 255.0;
    let (ssim_noisy, ssim_denoised) = if side.0 >= SSIM_WINDOW && side.1 >= SSIM_WINDOW {
        let img = |v: &[f64]| Image::new(side.0, side.1, v.to_vec());
        let (c, n, o) = (img(clean)?, img(noisy)?, img(out)?);
        (Some(ssim(&n, &c, peak)?), Some(ssim(&o, &c, peak)?))
    } else {
        (None, None)
    };
    Ok(MetricsRow {
        unit,
        alpha: None,
        loss: None,
        psnr_noisy_db: psnr(noisy, clean, peak)?.db(),
        psnr_denoised_db: psnr(out, clean, peak)?.db(),
        ssim_noisy,
        ssim_denoised,
    })
}

/// Adds seeded noise to `img`, denoises each patch on its grid graph, and reassembles.
///
/// Metrics are computed on the 8-bit noisy and denoised images; SSIM is omitted
/// for units smaller than its window.
pub fn denoise_image(img: &Pgm, patch: usize, opts: &DenoiseOptions) -> CliResult<ImageReport> {
    let start = Instant::now();
    let set = ImagePatchSet::split(img, patch).map_err(CliError::Usage)?;
    let clean = img.to_f64();
    let noisy =
        add_gaussian_noise(&GraphSignal::from_real(&clean), opts.sigma, opts.seed)?.real_channel(0);

    let f = gft_from_shift(&shift_operator(
        &build_grid_graph(patch, patch)?,
        opts.normalization,
    ))?;
    let offline = Offline::build(&f, opts)?;
    drop(f);
    let cfg = opts.config();

    let per_row = img.width / patch;
    let patch_pixels = |idx: usize| -> Vec<usize> {
        let (pr, pc) = (idx / per_row, idx % per_row);
        (0..patch * patch)
            .map(|k| (pr * patch + k / patch) * img.width + pc * patch + k % patch)
            .collect()
    };
    let gather = |v: &[f64], idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| v[i]).collect() };

    let mut recon = vec![0.0; clean.len()];
    let mut fitted = Vec::with_capacity(set.patches.len());
    for p in 0..set.patches.len() {
        let idx = patch_pixels(p);
        let x = GraphSignal::from_real(&gather(&clean, &idx));
        let y = GraphSignal::from_real(&gather(&noisy, &idx));
        let res = offline.denoiser(&y, &x, opts.loss_on_real)?.run(&cfg)?;
        for (&i, v) in idx.iter().zip(res.reconstruction.real_channel(0)) {
            recon[i] = v;
        }
        log::info!("patch {p}: alpha {:.4}, loss {:.4}", res.alpha, res.loss);
        fitted.push((res.alpha, res.loss));
    }

    let noisy_img = Pgm::from_f64(img.width, img.height, img.maxval, &noisy);
    let out_img = Pgm::from_f64(img.width, img.height, img.maxval, &recon);
    let (nq, oq) = (noisy_img.to_f64(), out_img.to_f64());
    let mut rows = Vec::with_capacity(fitted.len() + 1);
    for (p, (alpha, loss)) in fitted.into_iter().enumerate() {
        let idx = patch_pixels(p);
        let mut row = image_metrics(
            format!("patch{p}"),
            &gather(&clean, &idx),
            &gather(&nq, &idx),
            &gather(&oq, &idx),
            (patch, patch),
        )?;
        row.alpha = Some(alpha);
        row.loss = Some(loss);
        rows.push(row);
    }
    rows.push(image_metrics(
        "image".into(),
        &clean,
        &nq,
        &oq,
        (img.height, img.width),
    )?);
    Ok(ImageReport {
        noisy: noisy_img,
        denoised: out_img,
        rows,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloudOptions {
    pub k: usize,
    pub batch: usize,
    /// Build each batch graph from the clean rather than the noisy coordinates.
    pub graph_from_clean: bool,
    /// PSNR peak; defaults to the clean cloud's largest per-axis range.
    pub peak: Option<f64>,
    pub denoise: DenoiseOptions,
}

pub struct CloudReport {
    pub noisy: Vec<[f64; 3]>,
    pub denoised: Vec<[f64; 3]>,
    pub peak: f64,
    pub rows: Vec<MetricsRow>,
    pub wall_seconds: f64,
}

impl CloudReport {
    pub fn summary(&self) -> &MetricsRow {
        self.rows.last().expect("summary row")
    }
}

fn flat(points: &[[f64; 3]]) -> Vec<f64> {
    points.iter().flatten().copied().collect()
}

fn channels(points: &[[f64; 3]]) -> Vec<Vec<f64>> {
    (0..3)
        .map(|c| points.iter().map(|p| p[c]).collect())
        .collect()
}

/// Adds seeded noise to every coordinate, then denoises sequential batches on their k-NN graphs.
pub fn denoise_cloud(clean: &[[f64; 3]], opts: &CloudOptions) -> CliResult<CloudReport> {
    let start = Instant::now();
    if clean.is_empty() {
        return Err(CliError::Usage("point cloud is empty".into()));
    }
    if opts.batch == 0 {
        return Err(CliError::Usage("batch size must be positive".into()));
    }
    let d = &opts.denoise;
    let noisy_sig = add_gaussian_noise(
        &GraphSignal::from_real_channels(&channels(clean))?,
        d.sigma,
        d.seed,
    )?;
    let nc = noisy_sig.real_channels();
    let noisy: Vec<[f64; 3]> = (0..clean.len())
        .map(|i| [nc[0][i], nc[1][i], nc[2][i]])
        .collect();
    let peak = opts.peak.unwrap_or_else(|| cloud_peak(clean));
    let cfg = d.config();

    let mut denoised = Vec::with_capacity(clean.len());
    let mut rows = Vec::new();
    for (b, (xc, yc)) in clean
        .chunks(opts.batch)
        .zip(noisy.chunks(opts.batch))
        .enumerate()
    {
        let graph = build_knn_graph(if opts.graph_from_clean { xc } else { yc }, opts.k)?;
        let f = gft_from_shift(&shift_operator(&graph, d.normalization))?;
        let offline = Offline::build(&f, d)?;
        drop(f);
        let x = GraphSignal::from_real_channels(&channels(xc))?;
        let y = GraphSignal::from_real_channels(&channels(yc))?;
        let res = offline.denoiser(&y, &x, d.loss_on_real)?.run(&cfg)?;
        let rc = res.reconstruction.real_channels();
        let out: Vec<[f64; 3]> = (0..xc.len())
            .map(|i| [rc[0][i], rc[1][i], rc[2][i]])
            .collect();
        log::info!(
            "batch {b}: {} points, alpha {:.4}, loss {:.4}",
            xc.len(),
            res.alpha,
            res.loss
        );
        rows.push(MetricsRow {
            unit: format!("batch{b}"),
            alpha: Some(res.alpha),
            loss: Some(res.loss),
            psnr_noisy_db: psnr(&flat(yc), &flat(xc), peak)?.db(),
            psnr_denoised_db: psnr(&flat(&out), &flat(xc), peak)?.db(),
            ssim_noisy: None,
            ssim_denoised: None,
        });
        denoised.extend(out);
    }
    rows.push(MetricsRow {
        unit: "cloud".into(),
        alpha: None,
        loss: None,
        psnr_noisy_db: psnr(&flat(&noisy), &flat(clean), peak)?.db(),
        psnr_denoised_db: psnr(&flat(&denoised), &flat(clean), peak)?.db(),
        ssim_noisy: None,
        ssim_denoised: None,
    });
    Ok(CloudReport {
        noisy,
        denoised,
        peak,
        rows,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
