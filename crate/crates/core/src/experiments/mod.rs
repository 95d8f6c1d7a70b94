//! Named experiments, their run records and on-disk outputs.
//!
//! Every command produces a [`RunOutput`]: a [`RunRecord`] (serialized to
//! `run.json`) plus CSV tables. [`write_run`] places them in a fresh
//! versioned subdirectory of the output root.

mod acl;
pub mod config;
mod convergence;
mod drift;
mod growth;
mod simulate;
mod strichartz;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::datagen::{gaussian_data, load_data, rough_data, sci, RoughDataSpec};
use crate::error::{Error, Result};
use crate::rng::member_seed;
use crate::spectral::{Field, FourierGrid};

pub use acl::{acl_analysis, AclAnalysis};
pub use config::{growth_bound_exponent, DataKind, Experiment, ExperimentConfig, SeedSource};
pub use growth::growth_exponent_fit;

/// Version of the `run.json` layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// One adjudicated quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    #[serde(with = "config::lenient_f64")]
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Criterion {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            comparison: Comparison::AtMost,
            pass: value <= threshold,
            detail: String::new(),
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            comparison: Comparison::AtLeast,
            pass: value >= threshold,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// `name: PASS (value <= threshold)`.
    pub fn line(&self) -> String {
        let op = match self.comparison {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
        };
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let mut s = format!("{}: {verdict} ({:.4e} {op} {:.4e})", self.name, self.value, self.threshold);
        if !self.detail.is_empty() {
            s.push_str(&format!(" [{}]", self.detail));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedLineage {
    pub root: u64,
    pub source: SeedSource,
    /// Per-member seeds derived from the root.
    pub members: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: usize,
}

/// Self-contained description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub seeds: SeedLineage,
    pub workers: usize,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub elapsed_seconds: f64,
    pub outputs: Vec<OutputFile>,
    /// Fits and other derived numbers, keyed by experiment.
    pub summary: serde_json::Value,
    pub criteria: Vec<Criterion>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

/// A CSV table held in memory until the run is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: Vec<String>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push_numbers(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&v| sci(v)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        self.rows.iter().map(|r| r[i].parse().ok()).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub tables: Vec<Table>,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// What a command body hands back before bookkeeping.
pub(crate) struct Outcome {
    pub tables: Vec<Table>,
    pub summary: serde_json::Value,
    pub criteria: Vec<Criterion>,
    pub warnings: Vec<String>,
    pub member_seeds: Vec<u64>,
}

/// Size of the worker pool: `GBQ_WORKERS` if set, else all cores.
pub fn worker_count() -> Result<usize> {
    match std::env::var("GBQ_WORKERS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("GBQ_WORKERS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Validates `cfg` and runs `experiment` on a dedicated worker pool.
pub fn run_experiment(experiment: Experiment, cfg: &ExperimentConfig, seed_source: SeedSource) -> Result<RunOutput> {
    cfg.validate(experiment)?;
    let workers = worker_count()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let started_unix = unix_now();
    let clock = Instant::now();
    let outcome = pool.install(|| match experiment {
        Experiment::Simulate => simulate::run(cfg),
        Experiment::AclCheck => acl::run(cfg),
        Experiment::DriftScaling => drift::run(cfg),
        Experiment::GrowthStudy => growth::run(cfg),
        Experiment::StrichartzCheck => strichartz::run(cfg),
        Experiment::Convergence => convergence::run(cfg),
    })?;
    let pass = outcome.criteria.iter().all(|c| c.pass);
    let mut config = cfg.clone();
    config.run.experiment = Some(experiment);
    let record = RunRecord {
        schema_version: SCHEMA_VERSION,
        tool: "gbq".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment,
        config,
        seeds: SeedLineage {
            root: cfg.run.seed,
            source: seed_source,
            members: outcome.member_seeds,
        },
        workers,
        started_unix,
        finished_unix: unix_now(),
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        outputs: outcome
            .tables
            .iter()
            .map(|t| OutputFile {
                name: format!("{}.csv", t.name),
                columns: t.columns.clone(),
                rows: t.rows.len(),
            })
            .collect(),
        summary: outcome.summary,
        criteria: outcome.criteria,
        warnings: outcome.warnings,
        pass,
    };
    Ok(RunOutput {
        record,
        tables: outcome.tables,
    })
}

/// Writes the run into `<root>/<experiment>-NNN`, never reusing a directory.
pub fn write_run(root: &Path, out: &RunOutput) -> Result<PathBuf> {
    fs::create_dir_all(root)?;
    let dir = (1..10_000)
        .map(|i| root.join(format!("{}-{i:03}", out.record.experiment)))
        .find(|d| fs::create_dir(d).is_ok())
        .ok_or_else(|| Error::Config(format!("no free run directory under {}", root.display())))?;
    for t in &out.tables {
        t.write(&dir.join(format!("{}.csv", t.name)))?;
    }
    let json = serde_json::to_string_pretty(&out.record)?;
    fs::write(dir.join("run.json"), json + "\n")?;
    Ok(dir)
}

/// Initial data for `member` according to the `[data]` section.
pub fn initial_data(cfg: &ExperimentConfig, grid: &FourierGrid, seed: u64) -> Result<(Field, Field)> {
    let d = &cfg.data;
    match d.kind {
        DataKind::Zero => Ok((Field::zeros(grid), Field::zeros(grid))),
        DataKind::Gaussian => gaussian_data(d.amplitude, d.width, grid),
        DataKind::Rough => {
            let mut spec = RoughDataSpec::new(d.s, d.amplitude, seed).with_phases(d.phases);
            if let Some(b) = d.band_limit {
                spec = spec.with_band_limit(b);
            }
            rough_data(&spec, grid)
        }
        DataKind::File => {
            let path = d.path.as_ref().ok_or_else(|| Error::Config("data kind `file` needs `path`".into()))?;
            load_data(path, grid)
        }
    }
}

pub(crate) fn member_seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.run.members as u64).map(|m| member_seed(cfg.run.seed, m)).collect()
}

pub(crate) fn n_label(n: f64) -> String {
    format!("N{n}")
}
