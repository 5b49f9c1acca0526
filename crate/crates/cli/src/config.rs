//! Run configuration: a flat `key = value` text file.
//!
//! Blank lines and text after `#` are ignored. Lists are comma separated.
//! Unknown keys are rejected so typos do not silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use permcs::layermodel::ProbabilityConvention;
use permcs::recon::SolverOptions;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn fail<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Layer-model parameters without a grid shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub r0: usize,
    pub r1: usize,
    pub r2: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticVideo {
    Static,
    Moving,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
    pub trials: u64,
    /// Marks every output row as a reduced-size run.
    pub desk_scale: bool,
    pub solver: SolverOptions,

    pub grid_rows: usize,
    pub grid_cols: usize,
    pub r_pairs: Vec<(usize, usize)>,
    pub r2_values: Vec<usize>,
    pub alphas: Vec<f64>,
    pub convention: ProbabilityConvention,

    pub thresholds: Vec<f64>,

    pub ratios: Vec<f64>,
    pub crop: usize,
    pub synthetic_images: usize,
    pub model: ModelSpec,

    pub avg_ratios: Vec<f64>,
    pub split: f64,
    pub frame_pairs: usize,
    pub frame_width: usize,
    pub frame_height: usize,
    pub synthetic_video: SyntheticVideo,
    pub video_velocity: f64,

    pub fit_threshold: f64,

    pub images: Vec<PathBuf>,
    pub video: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults for every key except the seed.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            workers: 1,
            trials: 2000,
            desk_scale: true,
            solver: SolverOptions::default(),
            grid_rows: 16,
            grid_cols: 16,
            r_pairs: vec![(0, 1), (0, 2), (3, 5)],
            r2_values: vec![8, 12, 16],
            alphas: (1..=20).map(|i| i as f64 / 20.0).collect(),
            convention: ProbabilityConvention::Standard,
            thresholds: vec![400.0, 600.0, 800.0, 1000.0],
            ratios: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            crop: 64,
            synthetic_images: 20,
            model: ModelSpec { r0: 0, r1: 3, r2: 32, alpha: 0.15 },
            avg_ratios: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            split: permcs::codec::DEFAULT_SPLIT,
            frame_pairs: 5,
            frame_width: permcs::codec::io::QCIF_WIDTH,
            frame_height: permcs::codec::io::QCIF_HEIGHT,
            synthetic_video: SyntheticVideo::Moving,
            video_velocity: 1.0,
            fit_threshold: 1000.0,
            images: Vec::new(),
            video: None,
        }
    }

    /// Parses config text. `seed` overrides any seed in the text; one of the
    /// two must be present.
    pub fn parse(text: &str, seed: Option<u64>) -> Result<Self, ConfigError> {
        let mut pairs = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return fail(format!("line {}: expected `key = value`", n + 1));
            };
            let key = key.trim();
            if pairs.insert(key.to_string(), value.trim().to_string()).is_some() {
                return fail(format!("line {}: duplicate key `{key}`", n + 1));
            }
        }
        let seed = match (seed, pairs.remove("seed")) {
            (Some(s), _) => s,
            (None, Some(v)) => parse_one(&v, "seed")?,
            (None, None) => return fail("a seed is required (`seed = ...` or --seed)"),
        };
        let mut cfg = Self::with_seed(seed);
        for (key, value) in &pairs {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, seed: Option<u64>) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::parse(&text, seed)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "workers" => self.workers = parse_one(v, key)?,
            "trials" => self.trials = parse_one(v, key)?,
            "desk_scale" => self.desk_scale = parse_one(v, key)?,
            "max_iterations" => self.solver.max_iterations = parse_one(v, key)?,
            "splitting_iterations" => self.solver.splitting_iterations = parse_one(v, key)?,
            "primal_tolerance" => self.solver.primal_tolerance = parse_one(v, key)?,
            "dual_tolerance" => self.solver.dual_tolerance = parse_one(v, key)?,
            "feasibility_tolerance" => self.solver.feasibility_tolerance = parse_one(v, key)?,
            "grid_rows" => self.grid_rows = parse_one(v, key)?,
            "grid_cols" => self.grid_cols = parse_one(v, key)?,
            "r_pairs" => {
                self.r_pairs = split_list(v)
                    .map(|item| {
                        let (a, b) = item
                            .split_once(':')
                            .ok_or_else(|| ConfigError(format!("r_pairs: `{item}` is not `r0:r1`")))?;
                        Ok((parse_one(a.trim(), key)?, parse_one(b.trim(), key)?))
                    })
                    .collect::<Result<_, ConfigError>>()?
            }
            "r2_values" => self.r2_values = parse_list(v, key)?,
            "alphas" => self.alphas = parse_list(v, key)?,
            "convention" => {
                self.convention = match v {
                    "standard" => ProbabilityConvention::Standard,
                    "shifted" => ProbabilityConvention::Shifted,
                    _ => return fail(format!("convention must be `standard` or `shifted`, got `{v}`")),
                }
            }
            "thresholds" => self.thresholds = parse_list(v, key)?,
            "ratios" => self.ratios = parse_list(v, key)?,
            "crop" => self.crop = parse_one(v, key)?,
            "synthetic_images" => self.synthetic_images = parse_one(v, key)?,
            "model" => {
                let parts: Vec<&str> = split_list(v).collect();
                let [r0, r1, r2, alpha] = parts[..] else {
                    return fail("model expects `r0, r1, r2, alpha`");
                };
                self.model = ModelSpec {
                    r0: parse_one(r0, key)?,
                    r1: parse_one(r1, key)?,
                    r2: parse_one(r2, key)?,
                    alpha: parse_one(alpha, key)?,
                };
            }
            "avg_ratios" => self.avg_ratios = parse_list(v, key)?,
            "split" => self.split = parse_one(v, key)?,
            "frame_pairs" => self.frame_pairs = parse_one(v, key)?,
            "frame_width" => self.frame_width = parse_one(v, key)?,
            "frame_height" => self.frame_height = parse_one(v, key)?,
            "synthetic_video" => {
                self.synthetic_video = match v {
                    "static" => SyntheticVideo::Static,
                    "moving" => SyntheticVideo::Moving,
                    _ => return fail(format!("synthetic_video must be `static` or `moving`, got `{v}`")),
                }
            }
            "video_velocity" => self.video_velocity = parse_one(v, key)?,
            "fit_threshold" => self.fit_threshold = parse_one(v, key)?,
            "images" => self.images = split_list(v).map(PathBuf::from).collect(),
            "video" => self.video = Some(PathBuf::from(v)),
            _ => return fail(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Checks that every grid is non-empty and every value lies in range.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.workers == 0 {
            return fail("workers must be at least 1");
        }
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        self.solver.validate().map_err(|e| ConfigError(e.to_string()))?;
        for (name, empty) in [
            ("r_pairs", self.r_pairs.is_empty()),
            ("r2_values", self.r2_values.is_empty()),
            ("alphas", self.alphas.is_empty()),
            ("thresholds", self.thresholds.is_empty()),
            ("ratios", self.ratios.is_empty()),
            ("avg_ratios", self.avg_ratios.is_empty()),
        ] {
            if empty {
                return fail(format!("`{name}` is empty"));
            }
        }
        if self.alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return fail("alphas must be positive");
        }
        if self.thresholds.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return fail("thresholds must be nonnegative");
        }
        if self.ratios.iter().chain(&self.avg_ratios).any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return fail("ratios must lie in (0, 1]");
        }
        if self.grid_rows == 0 || self.grid_cols == 0 || self.crop == 0 {
            return fail("grid and crop sizes must be positive");
        }
        if self.frame_pairs == 0 || self.frame_width == 0 || self.frame_height == 0 {
            return fail("video needs at least one frame pair of positive size");
        }
        Ok(())
    }

    /// Effective settings as sorted `key = value` lines.
    pub fn echo(&self) -> Vec<String> {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let s = &self.solver;
        let m = &self.model;
        let mut lines = vec![
            format!("seed = {}", self.seed),
            format!("workers = {}", self.workers),
            format!("trials = {}", self.trials),
            format!("desk_scale = {}", self.desk_scale),
            format!("max_iterations = {}", s.max_iterations),
            format!("splitting_iterations = {}", s.splitting_iterations),
            format!("primal_tolerance = {}", s.primal_tolerance),
            format!("dual_tolerance = {}", s.dual_tolerance),
            format!("feasibility_tolerance = {}", s.feasibility_tolerance),
            format!("grid_rows = {}", self.grid_rows),
            format!("grid_cols = {}", self.grid_cols),
            format!(
                "r_pairs = {}",
                self.r_pairs.iter().map(|(a, b)| format!("{a}:{b}")).collect::<Vec<_>>().join(", ")
            ),
            format!(
                "r2_values = {}",
                self.r2_values.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
            ),
            format!("alphas = {}", list(&self.alphas)),
            format!("convention = {}", convention_name(self.convention)),
            format!("thresholds = {}", list(&self.thresholds)),
            format!("ratios = {}", list(&self.ratios)),
            format!("crop = {}", self.crop),
            format!("synthetic_images = {}", self.synthetic_images),
            format!("model = {}, {}, {}, {}", m.r0, m.r1, m.r2, m.alpha),
            format!("avg_ratios = {}", list(&self.avg_ratios)),
            format!("split = {}", self.split),
            format!("frame_pairs = {}", self.frame_pairs),
            format!("frame_width = {}", self.frame_width),
            format!("frame_height = {}", self.frame_height),
            format!(
                "synthetic_video = {}",
                match self.synthetic_video {
                    SyntheticVideo::Static => "static",
                    SyntheticVideo::Moving => "moving",
                }
            ),
            format!("video_velocity = {}", self.video_velocity),
            format!("fit_threshold = {}", self.fit_threshold),
        ];
        lines.sort();
        lines
    }
}

pub fn convention_name(c: ProbabilityConvention) -> &'static str {
    match c {
        ProbabilityConvention::Standard => "standard",
        ProbabilityConvention::Shifted => "shifted",
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_one<T: std::str::FromStr>(v: &str, key: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| ConfigError(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_list<T: std::str::FromStr>(v: &str, key: &str) -> Result<Vec<T>, ConfigError> {
    split_list(v).map(|item| parse_one(item, key)).collect()
}
