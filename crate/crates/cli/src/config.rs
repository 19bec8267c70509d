use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalOpts {
    /// Base of the digit expansion.
    #[arg(long, global = true)]
    pub gamma: Option<u64>,
    /// Table depth(s); repeat or comma-separate.
    #[arg(long, global = true, value_delimiter = ',')]
    pub k: Vec<u32>,
    /// Dimension.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Number of series terms for the α constants.
    #[arg(long, global = true)]
    pub terms: Option<u32>,
    /// Slice coordinate(s) x̃_2; repeat or comma-separate.
    #[arg(long, global = true, value_delimiter = ',')]
    pub x2: Vec<f64>,
    /// Number of equally spaced x̃_2 rows for sweeps.
    #[arg(long = "x2-grid", global = true)]
    pub x2_grid: Option<usize>,
    /// Mesh nodes per slice.
    #[arg(long, global = true)]
    pub mesh: Option<usize>,
    /// Newton tolerance on the residual ∞-norm.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Newton iteration cap.
    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Table output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// key=value file with defaults for any of the flags above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub gamma: u64,
    pub k: Vec<u32>,
    pub n: usize,
    pub terms: u32,
    pub x2: Vec<f64>,
    pub x2_grid: usize,
    pub mesh: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gamma: 10,
            k: vec![1],
            n: 2,
            terms: 4,
            x2: vec![0.5],
            x2_grid: 21,
            mesh: 1001,
            tol: 1e-10,
            max_iter: 20,
            out: PathBuf::from("out"),
            jobs: None,
            format: Format::Csv,
        }
    }
}

/// Raised for bad flags, config entries or parameter values; exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))
        .map_err(|e| usage(format!("{e:#}")))?;
    let mut entries = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(usage(format!(
                "{}:{}: expected key=value",
                path.display(),
                lineno + 1
            )));
        };
        entries.insert(key.trim().replace('_', "-"), value.trim().to_string());
    }
    Ok(entries)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| usage(format!("config: cannot parse {key} = {value:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| parse_value(key, v.trim()))
        .collect()
}

fn apply_file(cfg: &mut RunConfig, entries: &BTreeMap<String, String>) -> Result<()> {
    for (key, value) in entries {
        match key.as_str() {
            "gamma" => cfg.gamma = parse_value(key, value)?,
            "k" => cfg.k = parse_list(key, value)?,
            "n" => cfg.n = parse_value(key, value)?,
            "terms" => cfg.terms = parse_value(key, value)?,
            "x2" => cfg.x2 = parse_list(key, value)?,
            "x2-grid" => cfg.x2_grid = parse_value(key, value)?,
            "mesh" => cfg.mesh = parse_value(key, value)?,
            "tol" => cfg.tol = parse_value(key, value)?,
            "max-iter" => cfg.max_iter = parse_value(key, value)?,
            "out" => cfg.out = PathBuf::from(value),
            "jobs" => cfg.jobs = Some(parse_value(key, value)?),
            "format" => {
                cfg.format = Format::from_str(value, true)
                    .map_err(|_| usage(format!("config: unknown format {value:?}")))?
            }
            other => bail!(UsageError(format!("config: unknown key {other:?}"))),
        }
    }
    Ok(())
}

impl RunConfig {
    /// Defaults, overridden by the config file, overridden by flags.
    pub fn resolve(opts: &GlobalOpts) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &opts.config {
            apply_file(&mut cfg, &parse_config_file(path)?)?;
        }
        if let Some(v) = opts.gamma {
            cfg.gamma = v;
        }
        if !opts.k.is_empty() {
            cfg.k = opts.k.clone();
        }
        if let Some(v) = opts.n {
            cfg.n = v;
        }
        if let Some(v) = opts.terms {
            cfg.terms = v;
        }
        if !opts.x2.is_empty() {
            cfg.x2 = opts.x2.clone();
        }
        if let Some(v) = opts.x2_grid {
            cfg.x2_grid = v;
        }
        if let Some(v) = opts.mesh {
            cfg.mesh = v;
        }
        if let Some(v) = opts.tol {
            cfg.tol = v;
        }
        if let Some(v) = opts.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = &opts.out {
            cfg.out = v.clone();
        }
        if opts.jobs.is_some() {
            cfg.jobs = opts.jobs;
        }
        if let Some(v) = opts.format {
            cfg.format = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.k.is_empty() {
            return Err(usage("at least one depth k is required"));
        }
        if self.x2.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(usage("x2 values must lie in [0, 1]"));
        }
        if self.x2_grid < 2 {
            return Err(usage("x2-grid needs at least 2 rows"));
        }
        if self.mesh < 3 {
            return Err(usage("mesh needs at least 3 nodes"));
        }
        if !(self.tol > 0.0) {
            return Err(usage("tol must be positive"));
        }
        if self.jobs == Some(0) {
            return Err(usage("jobs must be at least 1"));
        }
        Ok(())
    }
}
