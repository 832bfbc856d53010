//! Flat `key = value` configuration with command-line overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use wkpi_core::pipeline::{Descriptor, InitMethod, PipelineConfig, SurfaceChoice};
use wkpi_core::svm::CvConfig;
use wkpi_core::wkpi::{BatchMode, KernelVariant};

pub const KEYS: &[&str] = &[
    "dataset",
    "name",
    "descriptor",
    "dimensions",
    "use_extended",
    "drop_essential",
    "y_resolution",
    "tau",
    "surface_weight",
    "kernel_variant",
    "init",
    "m",
    "sigma",
    "c",
    "penalty",
    "max_iterations",
    "cost_tolerance",
    "batch",
    "revalidate_every",
    "initial_step",
    "backtrack",
    "outer_folds",
    "inner_folds",
    "repeats",
    "m_grid",
    "sigma_grid",
    "c_grid",
    "stratified",
    "svm_tolerance",
    "test_fraction",
    "seed",
    "out",
    "threads",
];

#[derive(Debug, Clone)]
pub struct Settings {
    /// TU directory, or `synthetic:cycles-vs-trees[:PER_CLASS]`.
    pub dataset: Option<String>,
    /// Dataset file prefix; defaults to the directory name.
    pub name: Option<String>,
    pub pipeline: PipelineConfig,
    pub cv: CvConfig,
    pub m: usize,
    pub sigma: f64,
    pub c: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            dataset: None,
            name: None,
            pipeline: PipelineConfig::default(),
            cv: CvConfig::default(),
            m: 5,
            sigma: 1.0,
            c: 1.0,
            test_fraction: 0.2,
            seed: 0,
            out: PathBuf::from("wkpi-out"),
            threads: None,
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| anyhow!("{key}: cannot parse {v:?}: {e}"))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => bail!("{key}: expected true or false, got {v:?}"),
    }
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let v = value.trim();
        let p = &mut self.pipeline;
        let t = &mut p.metric.train;
        match key.as_str() {
            "dataset" => self.dataset = Some(v.to_string()),
            "name" => self.name = Some(v.to_string()),
            "descriptor" => p.descriptor = v.parse::<Descriptor>()?,
            "dimensions" => p.diagrams.dimensions = list(&key, v)?,
            "use_extended" => p.diagrams.use_extended = boolean(&key, v)?,
            "drop_essential" => p.diagrams.drop_essential = boolean(&key, v)?,
            "y_resolution" => p.images.y_resolution = num(&key, v)?,
            "tau" => p.images.tau = if v == "auto" { None } else { Some(num(&key, v)?) },
            "surface_weight" => {
                p.images.surface = match v.split_once(':') {
                    _ if v == "constant" => SurfaceChoice::Constant,
                    _ if v == "pl" => SurfaceChoice::PiecewiseLinear(None),
                    Some(("pl", b)) => SurfaceChoice::PiecewiseLinear(Some(num(&key, b)?)),
                    _ => bail!("surface_weight: expected constant, pl or pl:B, got {v:?}"),
                }
            }
            "kernel_variant" => p.metric.variant = v.parse::<KernelVariant>().map_err(|e| anyhow!(e))?,
            "init" => p.metric.init = v.parse::<InitMethod>()?,
            "m" => self.m = num(&key, v)?,
            "sigma" => self.sigma = num(&key, v)?,
            "c" => self.c = num(&key, v)?,
            "penalty" => t.penalty = num(&key, v)?,
            "max_iterations" => t.max_iterations = num(&key, v)?,
            "cost_tolerance" => t.cost_tolerance = num(&key, v)?,
            "batch" => {
                t.batch = match v {
                    "auto" => BatchMode::Auto,
                    "full" => BatchMode::Full,
                    n => BatchMode::Minibatch(num(&key, n)?),
                }
            }
            "revalidate_every" => t.revalidate_every = num(&key, v)?,
            "initial_step" => t.line_search.initial_step = num(&key, v)?,
            "backtrack" => t.line_search.backtrack = num(&key, v)?,
            "outer_folds" => self.cv.outer_folds = num(&key, v)?,
            "inner_folds" => self.cv.inner_folds = num(&key, v)?,
            "repeats" => self.cv.repeats = num(&key, v)?,
            "m_grid" => self.cv.m_grid = list(&key, v)?,
            "sigma_grid" => self.cv.sigma_grid = list(&key, v)?,
            "c_grid" => self.cv.c_grid = list(&key, v)?,
            "stratified" => self.cv.stratified = boolean(&key, v)?,
            "svm_tolerance" => self.cv.tolerance = num(&key, v)?,
            "test_fraction" => self.test_fraction = num(&key, v)?,
            "seed" => self.seed = num(&key, v)?,
            "out" => self.out = PathBuf::from(v),
            "threads" => self.threads = Some(num(&key, v)?),
            _ => bail!("unknown configuration key {key:?} (known keys: {})", KEYS.join(", ")),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected `key = value`", path.display(), i + 1))?;
            self.set(k, v).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
        self.set(k, v)
    }

    pub fn validate(&mut self) -> Result<()> {
        self.cv.seed = self.seed;
        self.pipeline.diagrams.validate()?;
        self.pipeline.metric.train.validate()?;
        if self.pipeline.images.y_resolution == 0 {
            bail!("y_resolution must be positive");
        }
        if self.m == 0 {
            bail!("m must be positive");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) || !(self.c > 0.0 && self.c.is_finite()) {
            bail!("sigma and c must be positive and finite");
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            bail!("test_fraction must lie in (0, 1)");
        }
        if self.threads == Some(0) {
            bail!("threads must be positive");
        }
        Ok(())
    }
}
