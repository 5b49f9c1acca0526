//! The five experiment commands. Each returns its tables in memory; writing
//! them out is left to [`Report::write`].

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use permcs::codec::io::{read_pgm, read_yuv420_luma};
use permcs::codec::synthetic::{layer_model_image, smooth_scene};
use permcs::codec::{
    allocate_ratios, decode_nonreference, decode_reference, decode_reference_with, dct2, encode_pair,
    encode_reference_with, measurement_count, psnr, Frame, Scan,
};
use permcs::layermodel::{
    acceptance_lower_bound, empirical_layer_profile, model_profile, monte_carlo_acceptance, LayerModelParams,
};
use permcs::permute::zigzag_permutation;
use permcs::sensing::gaussian_sensing;
use permcs::signal::{layer_sizes, sparsity_vector, threshold_support, Signal2D};

use crate::config::{convention_name, ConfigError, RunConfig, SyntheticVideo};
use crate::output::{file_sha256, num, Report, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    BoundSurface,
    PermTable,
    ImagePsnr,
    VideoPsnr,
    LayerFit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::BoundSurface => "bound-surface",
            Self::PermTable => "perm-table",
            Self::ImagePsnr => "image-psnr",
            Self::VideoPsnr => "video-psnr",
            Self::LayerFit => "layer-fit",
        }
    }
}

/// Runs a command. Non-empty `inputs` replace the input paths of the config.
pub fn run(cmd: Command, cfg: &RunConfig, inputs: &[PathBuf]) -> Result<Report> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    pool.install(|| match cmd {
        Command::BoundSurface => bound_surface(cfg),
        Command::PermTable => perm_table(cfg, pick(inputs, &cfg.images)),
        Command::ImagePsnr => image_psnr(cfg, pick(inputs, &cfg.images)),
        Command::VideoPsnr => {
            let path = inputs.first().or(cfg.video.as_ref());
            if inputs.len() > 1 {
                bail!(ConfigError("video-psnr takes a single video".into()));
            }
            video_psnr(cfg, path.map(PathBuf::as_path))
        }
        Command::LayerFit => {
            let images = pick(inputs, &cfg.images);
            let [image] = images else {
                bail!(ConfigError(format!("layer-fit takes exactly one image, got {}", images.len())));
            };
            layer_fit(cfg, image)
        }
    })
}

fn pick<'a>(inputs: &'a [PathBuf], configured: &'a [PathBuf]) -> &'a [PathBuf] {
    if inputs.is_empty() {
        configured
    } else {
        inputs
    }
}

fn flag(cfg: &RunConfig) -> String {
    cfg.desk_scale.to_string()
}

fn image_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn load_image(path: &Path) -> Result<Signal2D> {
    read_pgm(path).with_context(|| format!("cannot read image {}", path.display()))
}

/// Acceptance bound next to a Monte Carlo estimate for every valid tuple of
/// `r_pairs x r2_values x alphas` on a `grid_rows x grid_cols` grid.
///
/// Combinations with `r2 <= r1`, or violating the bound's extra hypothesis,
/// are skipped. A pair with `r0 >= r1` or an `r2` beyond the grid is a
/// config error, as is a grid left with no tuple.
pub fn bound_surface(cfg: &RunConfig) -> Result<Report> {
    let (rows, cols) = (cfg.grid_rows, cfg.grid_cols);
    for &(r0, r1) in &cfg.r_pairs {
        if r0 >= r1 {
            bail!(ConfigError(format!("r_pairs entry {r0}:{r1} needs r0 < r1")));
        }
    }
    if let Some(r2) = cfg.r2_values.iter().find(|&&r2| r2 > rows.min(cols)) {
        bail!(ConfigError(format!("r2 = {r2} exceeds the {rows}x{cols} grid")));
    }
    let mut table = Table::new(
        "bound_surface_v1",
        &[
            "r0", "r1", "r2", "alpha", "convention", "rows", "cols", "bound", "mc_estimate", "mc_stderr", "trials",
            "desk_scale",
        ],
    );
    for &(r0, r1) in &cfg.r_pairs {
        for &r2 in &cfg.r2_values {
            if r2 <= r1 {
                continue;
            }
            for &alpha in &cfg.alphas {
                let p = LayerModelParams::new(r0, r1, r2, alpha, rows, cols)
                    .map_err(|e| ConfigError(e.to_string()))?
                    .with_convention(cfg.convention);
                if !p.satisfies_bound_hypothesis() {
                    continue;
                }
                let bound = acceptance_lower_bound(&p)?;
                let mc = monte_carlo_acceptance(&p, cfg.trials, cfg.seed)?;
                table.push(vec![
                    r0.to_string(),
                    r1.to_string(),
                    r2.to_string(),
                    num(alpha),
                    convention_name(cfg.convention).into(),
                    rows.to_string(),
                    cols.to_string(),
                    num(bound),
                    num(mc.estimate),
                    num(mc.std_error),
                    mc.trials.to_string(),
                    flag(cfg),
                ]);
            }
        }
    }
    if table.rows.is_empty() {
        bail!(ConfigError("the bound grid has no valid (r0, r1, r2, alpha) tuple".into()));
    }
    Ok(Report { command: "bound-surface", tables: vec![table], inputs: Vec::new() })
}

/// Largest column count of the thresholded DCT support before and after the
/// zigzag permutation, per image and threshold.
pub fn perm_table(cfg: &RunConfig, images: &[PathBuf]) -> Result<Report> {
    if images.is_empty() {
        bail!(ConfigError("perm-table needs at least one image".into()));
    }
    let mut table = Table::new(
        "perm_table_v1",
        &["image", "sha256", "rows", "cols", "threshold", "nonzeros", "before", "after", "desk_scale"],
    );
    for path in images {
        let spectrum = dct2(&load_image(path)?);
        let hash = file_sha256(path)?;
        for row in perm_rows(&spectrum, &cfg.thresholds)? {
            let (t, nonzeros, before, after) = row;
            table.push(vec![
                image_name(path),
                hash.clone(),
                spectrum.rows().to_string(),
                spectrum.cols().to_string(),
                num(t),
                nonzeros.to_string(),
                before.to_string(),
                after.to_string(),
                // whole images are used, never crops
                "false".into(),
            ]);
        }
    }
    Ok(Report { command: "perm-table", tables: vec![table], inputs: images.to_vec() })
}

/// `(threshold, support size, chebyshev before, chebyshev after)` for a
/// DCT spectrum.
pub fn perm_rows(spectrum: &Signal2D, thresholds: &[f64]) -> Result<Vec<(f64, usize, usize, usize)>> {
    let zz = zigzag_permutation(spectrum.rows(), spectrum.cols());
    thresholds
        .iter()
        .map(|&t| {
            let support = threshold_support(spectrum, t)?;
            let before = sparsity_vector(&support).chebyshev();
            let after = sparsity_vector(&zz.apply_support(&support)?).chebyshev();
            Ok((t, support.len(), before, after))
        })
        .collect()
}

/// Centred `size x size` crop, or the whole image when it is smaller.
pub fn centre_crop(x: &Signal2D, size: usize) -> Signal2D {
    let (h, w) = (size.min(x.rows()), size.min(x.cols()));
    let (top, left) = ((x.rows() - h) / 2, (x.cols() - w) / 2);
    let data = (0..h)
        .flat_map(|i| (0..w).map(move |j| (i, j)))
        .map(|(i, j)| x.get(top + i + 1, left + j + 1))
        .collect();
    Signal2D::from_row_major(h, w, data).expect("crop shape matches data")
}

/// PSNR against compression ratio with and without the zigzag permutation.
///
/// Images are centred crops of the inputs. Without inputs, `synthetic_images`
/// layer-model images of size `crop` are drawn from seeds `seed + 1, ...`.
/// Both scans share one sensing matrix per ratio, drawn from `seed`.
pub fn image_psnr(cfg: &RunConfig, images: &[PathBuf]) -> Result<Report> {
    let sources: Vec<(String, Signal2D)> = if images.is_empty() {
        if cfg.synthetic_images == 0 {
            bail!(ConfigError("image-psnr needs input images or synthetic_images > 0".into()));
        }
        let m = cfg.model;
        let p = LayerModelParams::new(m.r0, m.r1, m.r2, m.alpha, cfg.crop, cfg.crop)
            .map_err(|e| ConfigError(format!("model: {e}")))?;
        (0..cfg.synthetic_images)
            .map(|i| (format!("synthetic-{}", i + 1), layer_model_image(&p, cfg.seed.wrapping_add(1 + i as u64))))
            .collect()
    } else {
        images
            .iter()
            .map(|p| Ok((image_name(p), centre_crop(&load_image(p)?, cfg.crop))))
            .collect::<Result<_>>()?
    };

    let mut table = Table::new(
        "image_psnr_v1",
        &["image", "rows", "cols", "ratio", "measurements", "scan", "psnr_db", "unconverged_columns", "desk_scale"],
    );
    let mut gains = Table::new("image_psnr_gain_v1", &["ratio", "images", "median_gain_db", "desk_scale"]);
    let mut per_ratio: Vec<Vec<f64>> = vec![Vec::new(); cfg.ratios.len()];
    for (name, img) in &sources {
        let frame = Frame::clamped(img, 1)?;
        let (rows, cols) = frame.shape();
        for (r, &ratio) in cfg.ratios.iter().enumerate() {
            let k = measurement_count(ratio, rows)?;
            let a = gaussian_sensing(k, rows, cfg.seed)?;
            let mut psnrs = [0.0; 2];
            for (slot, (scan, scan_name)) in [(Scan::Zigzag, "zigzag"), (Scan::Identity, "identity")].into_iter().enumerate() {
                let code = encode_reference_with(&frame, &a, scan)?;
                let decoded = decode_reference_with(&code, &a, &cfg.solver, cfg.workers)?;
                psnrs[slot] = psnr(&frame, &decoded.frame)?;
                let unconverged = decoded.statuses.iter().filter(|s| !s.is_converged()).count();
                table.push(vec![
                    name.clone(),
                    rows.to_string(),
                    cols.to_string(),
                    num(ratio),
                    k.to_string(),
                    scan_name.into(),
                    num(psnrs[slot]),
                    unconverged.to_string(),
                    flag(cfg),
                ]);
            }
            per_ratio[r].push(psnr_gain(psnrs[0], psnrs[1]));
        }
    }
    for (ratio, g) in cfg.ratios.iter().zip(&per_ratio) {
        gains.push(vec![num(*ratio), g.len().to_string(), num(median(g)), flag(cfg)]);
    }
    Ok(Report { command: "image-psnr", tables: vec![table, gains], inputs: images.to_vec() })
}

/// Difference of two PSNR values, zero when both are infinite.
pub fn psnr_gain(with: f64, without: f64) -> f64 {
    if with == without {
        0.0
    } else {
        with - without
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        let (a, b) = (v[n / 2 - 1], v[n / 2]);
        if a == b {
            a
        } else {
            (a + b) / 2.0
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Loads `2 * frame_pairs` luma frames from a YUV file, or renders them.
pub fn video_frames(cfg: &RunConfig, path: Option<&Path>) -> Result<Vec<Frame>> {
    let needed = 2 * cfg.frame_pairs;
    let planes = match path {
        Some(p) => {
            let planes = read_yuv420_luma(p, cfg.frame_width, cfg.frame_height, Some(needed))
                .with_context(|| format!("cannot read video {}", p.display()))?;
            if planes.len() < needed {
                bail!("{} holds {} frames, {needed} are needed", p.display(), planes.len());
            }
            planes
        }
        None => {
            let velocity = match cfg.synthetic_video {
                SyntheticVideo::Static => 0.0,
                SyntheticVideo::Moving => cfg.video_velocity,
            };
            (1..=needed)
                .map(|i| smooth_scene(cfg.frame_height, cfg.frame_width, i, velocity, cfg.seed))
                .collect::<Result<_, _>>()?
        }
    };
    planes.iter().enumerate().map(|(i, x)| Ok(Frame::clamped(x, i + 1)?)).collect()
}

/// Mean reference and non-reference PSNR per average ratio, plus the decode
/// wall-clock in a separate timing table.
pub fn video_psnr(cfg: &RunConfig, path: Option<&Path>) -> Result<Report> {
    let frames = video_frames(cfg, path)?;
    let source = match path {
        Some(p) => image_name(p),
        None => match cfg.synthetic_video {
            SyntheticVideo::Static => "synthetic-static".into(),
            SyntheticVideo::Moving => "synthetic-moving".into(),
        },
    };
    let (rows, _) = frames[0].shape();
    let mut table = Table::new(
        "video_psnr_v1",
        &[
            "source", "avg_ratio", "ref_ratio", "nonref_ratio", "ref_measurements", "nonref_measurements", "pairs",
            "mean_ref_psnr_db", "mean_nonref_psnr_db", "unconverged_columns", "desk_scale",
        ],
    );
    let mut timing = Table::new("video_timing_v1", &["source", "avg_ratio", "reconstruction_seconds"]);
    timing.timing = true;
    for &avg in &cfg.avg_ratios {
        let (r_ref, r_nonref) = allocate_ratios(avg, cfg.split).map_err(|e| ConfigError(e.to_string()))?;
        let mut ref_psnr = Vec::new();
        let mut nonref_psnr = Vec::new();
        let mut unconverged = 0;
        let mut seconds = 0.0;
        for pair in frames.chunks_exact(2) {
            let code = encode_pair(&pair[0], &pair[1], avg, cfg.split, cfg.seed)?;
            let start = Instant::now();
            let reference = decode_reference(&code.reference, &cfg.solver, cfg.workers)?;
            let nonreference = decode_nonreference(&code.nonreference, &reference.frame, &cfg.solver, cfg.workers)?;
            seconds += start.elapsed().as_secs_f64();
            ref_psnr.push(psnr(&pair[0], &reference.frame)?);
            nonref_psnr.push(psnr(&pair[1], &nonreference.frame)?);
            unconverged += reference
                .statuses
                .iter()
                .chain(&nonreference.statuses)
                .filter(|s| !s.is_converged())
                .count();
        }
        table.push(vec![
            source.clone(),
            num(avg),
            num(r_ref),
            num(r_nonref),
            measurement_count(r_ref, rows)?.to_string(),
            measurement_count(r_nonref, rows)?.to_string(),
            cfg.frame_pairs.to_string(),
            num(mean(&ref_psnr)),
            num(mean(&nonref_psnr)),
            unconverged.to_string(),
            flag(cfg),
        ]);
        timing.push(vec![source.clone(), num(avg), format!("{seconds:.6}")]);
    }
    let inputs = path.map(|p| vec![p.to_path_buf()]).unwrap_or_default();
    Ok(Report { command: "video-psnr", tables: vec![table, timing], inputs })
}

/// Empirical per-layer occupancy of the thresholded DCT support next to the
/// layer-model curve, and their mean absolute deviation over layers
/// `1..=r2`.
pub fn layer_fit(cfg: &RunConfig, path: &Path) -> Result<Report> {
    let img = load_image(path)?;
    let (rows, cols) = img.shape();
    let m = cfg.model;
    let params = LayerModelParams::new(m.r0, m.r1, m.r2, m.alpha, rows, cols)
        .map_err(|e| ConfigError(format!("model: {e}")))?
        .with_convention(cfg.convention);
    let support = threshold_support(&dct2(&img), cfg.fit_threshold)?;
    let empirical = empirical_layer_profile(&support);
    let model = model_profile(&params);
    let sizes = layer_sizes(rows, cols);

    let mut table = Table::new("layer_fit_v1", &["layer", "cells", "occupied", "empirical", "model", "desk_scale"]);
    for (i, ((e, p), size)) in empirical.iter().zip(&model).zip(&sizes).enumerate() {
        table.push(vec![
            (i + 1).to_string(),
            size.to_string(),
            ((e * *size as f64).round() as usize).to_string(),
            num(*e),
            num(*p),
            "false".into(),
        ]);
    }
    let deviation = mean_abs_deviation(&empirical, &model, m.r2);
    let mut summary = Table::new(
        "layer_fit_summary_v1",
        &["image", "sha256", "threshold", "r0", "r1", "r2", "alpha", "convention", "mean_abs_deviation", "desk_scale"],
    );
    summary.push(vec![
        image_name(path),
        file_sha256(path)?,
        num(cfg.fit_threshold),
        m.r0.to_string(),
        m.r1.to_string(),
        m.r2.to_string(),
        num(m.alpha),
        convention_name(cfg.convention).into(),
        num(deviation),
        "false".into(),
    ]);
    Ok(Report { command: "layer-fit", tables: vec![table, summary], inputs: vec![path.to_path_buf()] })
}

/// Mean of `|empirical - model|` over layers `1..=last`.
pub fn mean_abs_deviation(empirical: &[f64], model: &[f64], last: usize) -> f64 {
    let n = last.min(empirical.len()).min(model.len());
    empirical[..n].iter().zip(&model[..n]).map(|(e, p)| (e - p).abs()).sum::<f64>() / n as f64
}
