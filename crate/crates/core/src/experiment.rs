//! Experiment files and sweeps.
//!
//! An experiment file is TOML. Top-level keys and tables override fields of
//! the base [`SimConfig`]; the `[experiment]` table holds the sweep:
//!
//! ```toml
//! duration_ms = 60000
//!
//! [layout]
//! n_sites = 1
//!
//! [power_control]
//! alpha = 0.8
//!
//! [experiment]
//! lambda_dl = [0.5, 1.0, 1.5]
//! seeds = [1, 2, 3, 4, 5]
//! schemes = ["baseline", "proposed"]
//! output_dir = "results"
//! ```
//!
//! Every absent field takes its default, so an empty file describes the
//! full 19-site deployment swept over the standard eight load points.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run, RunMetrics, Scheme, SimConfig};
use crate::error::Error as SimError;
use crate::traffic::LinkDirection;

pub const RESULTS_FILE: &str = "results.csv";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },

    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}{key}: {message}", .line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        key: String,
        line: Option<usize>,
        message: String,
    },

    #[error("run λ_D={lambda_dl} scheme={scheme} seed={seed} failed: {source}")]
    Run {
        lambda_dl: f64,
        scheme: Scheme,
        seed: u64,
        source: SimError,
    },

    #[error("writing results: {0}")]
    Output(String),
}

pub fn default_lambda_sweep() -> Vec<f64> {
    (1..=8).map(|i| i as f64 * 0.25).collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SweepSection {
    lambda_dl: Vec<f64>,
    seeds: Vec<u64>,
    schemes: Vec<Scheme>,
    output_dir: PathBuf,
    workers: Option<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            lambda_dl: default_lambda_sweep(),
            seeds: vec![1],
            schemes: vec![Scheme::Baseline, Scheme::Proposed],
            output_dir: PathBuf::from("results"),
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: SimConfig,
    /// Downlink arrival rates; the uplink rate is half of each.
    pub lambda_dl: Vec<f64>,
    pub seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
    pub output_dir: PathBuf,
    /// Worker threads; all cores when unset.
    pub workers: Option<usize>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let sweep = SweepSection::default();
        Self {
            base: SimConfig::default(),
            lambda_dl: sweep.lambda_dl,
            seeds: sweep.seeds,
            schemes: sweep.schemes,
            output_dir: sweep.output_dir,
            workers: sweep.workers,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |key: &str, message: &str| ExperimentError::Invalid {
            key: key.to_owned(),
            line: None,
            message: message.to_owned(),
        };
        if self.lambda_dl.is_empty() {
            return Err(bad("experiment.lambda_dl", "sweep must not be empty"));
        }
        if self.lambda_dl.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(bad("experiment.lambda_dl", "rates must be finite and >= 0"));
        }
        if self.seeds.is_empty() {
            return Err(bad("experiment.seeds", "need at least one seed"));
        }
        if self.schemes.is_empty() {
            return Err(bad("experiment.schemes", "need at least one scheme"));
        }
        if self.workers == Some(0) {
            return Err(bad("experiment.workers", "must be at least 1"));
        }
        self.base.validate().map_err(|e| match e {
            SimError::InvalidParameter { name, reason } => ExperimentError::Invalid {
                key: name.to_owned(),
                line: None,
                message: reason,
            },
            other => ExperimentError::Invalid {
                key: "config".into(),
                line: None,
                message: other.to_string(),
            },
        })
    }

    /// Every (λ_D, scheme, seed) combination in output order.
    pub fn jobs(&self) -> Vec<SimConfig> {
        let mut jobs =
            Vec::with_capacity(self.lambda_dl.len() * self.schemes.len() * self.seeds.len());
        for &lambda in &self.lambda_dl {
            for &scheme in &self.schemes {
                for &seed in &self.seeds {
                    let mut cfg = self.base.clone();
                    cfg.traffic.lambda_dl = lambda;
                    cfg.scheme = scheme;
                    cfg.seed = seed;
                    jobs.push(cfg);
                }
            }
        }
        jobs
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Line of the assignment to the dotted `key`, following table headers.
fn locate_key(text: &str, key: &str) -> Option<usize> {
    let mut table = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(header) = line.strip_prefix('[') {
            table = header
                .trim_start_matches('[')
                .trim_end_matches(']')
                .trim()
                .to_owned();
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else {
            continue;
        };
        let lhs: String = lhs.split('.').map(str::trim).collect::<Vec<_>>().join(".");
        let full = if table.is_empty() {
            lhs
        } else {
            format!("{table}.{lhs}")
        };
        if full == key {
            return Some(i + 1);
        }
    }
    None
}

fn with_line(err: ExperimentError, text: &str) -> ExperimentError {
    match err {
        ExperimentError::Invalid {
            key,
            line: None,
            message,
        } => {
            let line = locate_key(text, &key);
            ExperimentError::Invalid { key, line, message }
        }
        other => other,
    }
}

fn syntax(text: &str, err: toml::de::Error) -> ExperimentError {
    let (line, column) = err.span().map_or((0, 0), |s| line_col(text, s.start));
    ExperimentError::Syntax {
        line,
        column,
        message: err.message().to_owned(),
    }
}

pub fn parse_experiment_str(text: &str) -> Result<ExperimentSpec, ExperimentError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| syntax(text, e))?;
    let sweep: SweepSection = match table.remove("experiment") {
        Some(v) => {
            let s = toml::to_string(&v).map_err(|e| ExperimentError::Output(e.to_string()))?;
            toml::from_str(&s).map_err(|e| ExperimentError::Syntax {
                line: field_line(text, e.message()),
                column: 1,
                message: format!("[experiment]: {}", e.message()),
            })?
        }
        None => SweepSection::default(),
    };
    // the remaining tables are re-serialised, so error spans no longer match the file
    let base: SimConfig = if table.is_empty() {
        SimConfig::default()
    } else {
        let without_sweep =
            toml::to_string(&table).map_err(|e| ExperimentError::Output(e.to_string()))?;
        toml::from_str(&without_sweep).map_err(|e| ExperimentError::Syntax {
            line: field_line(text, e.message()),
            column: 1,
            message: e.message().to_owned(),
        })?
    };

    let spec = ExperimentSpec {
        base,
        lambda_dl: sweep.lambda_dl,
        seeds: sweep.seeds,
        schemes: sweep.schemes,
        output_dir: sweep.output_dir,
        workers: sweep.workers,
    };
    spec.validate().map_err(|e| with_line(e, text))?;
    Ok(spec)
}

/// Best-effort line of the key named in a serde "unknown field" message; 0
/// when it cannot be found.
fn field_line(text: &str, msg: &str) -> usize {
    let Some(field) = msg
        .split("unknown field `")
        .nth(1)
        .and_then(|r| r.split('`').next())
    else {
        return 0;
    };
    text.lines()
        .position(|l| {
            l.trim_start()
                .strip_prefix(field)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}

pub fn parse_experiment(path: &Path) -> Result<ExperimentSpec, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|source| ExperimentError::Read {
        path: path.to_owned(),
        source,
    })?;
    parse_experiment_str(&text)
}

/// One CSV row: a (run, direction) pair. Throughputs are NaN when no packet
/// completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub lambda_ul: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub direction: LinkDirection,
    pub avg_tput_mbps: f64,
    pub p5_tput_mbps: f64,
    pub completion_ratio: f64,
    pub mean_delta_db: f64,
}

pub fn rows_for(cfg: &SimConfig, metrics: &RunMetrics) -> [ResultRow; 2] {
    LinkDirection::BOTH.map(|dir| {
        let m = metrics.direction(dir);
        ResultRow {
            lambda_ul: cfg.traffic.lambda_ul(),
            scheme: cfg.scheme,
            seed: cfg.seed,
            direction: dir,
            avg_tput_mbps: m.throughput.mean_bps.map_or(f64::NAN, |v| v / 1e6),
            p5_tput_mbps: m.throughput.p5_bps.map_or(f64::NAN, |v| v / 1e6),
            completion_ratio: m.completion_ratio(),
            mean_delta_db: metrics.mean_delta_db,
        }
    })
}

/// Run every job of the sweep and return the metrics in job order.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<(SimConfig, RunMetrics)>, ExperimentError> {
    spec.validate()?;
    let jobs = spec.jobs();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = spec.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| ExperimentError::Output(e.to_string()))?;
    pool.install(|| {
        jobs.into_par_iter()
            .map(|cfg| {
                run(&cfg)
                    .map(|m| (cfg.clone(), m))
                    .map_err(|source| ExperimentError::Run {
                        lambda_dl: cfg.traffic.lambda_dl,
                        scheme: cfg.scheme,
                        seed: cfg.seed,
                        source,
                    })
            })
            .collect()
    })
}

pub fn sweep_rows(spec: &ExperimentSpec) -> Result<Vec<ResultRow>, ExperimentError> {
    Ok(run_sweep(spec)?
        .iter()
        .flat_map(|(cfg, m)| rows_for(cfg, m))
        .collect())
}

pub fn write_rows<W: io::Write>(out: W, rows: &[ResultRow]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)
            .map_err(|e| ExperimentError::Output(e.to_string()))?;
    }
    w.flush()
        .map_err(|e| ExperimentError::Output(e.to_string()))
}

/// Run the sweep and write `results.csv` into the output directory. Nothing
/// is left behind if a run fails.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<PathBuf, ExperimentError> {
    let rows = sweep_rows(spec)?;
    let out = |e: io::Error| ExperimentError::Output(e.to_string());
    fs::create_dir_all(&spec.output_dir).map_err(out)?;
    let path = spec.output_dir.join(RESULTS_FILE);
    let partial = spec.output_dir.join(format!("{RESULTS_FILE}.partial"));
    let written = fs::File::create(&partial)
        .map_err(out)
        .and_then(|f| write_rows(io::BufWriter::new(f), &rows))
        .and_then(|_| fs::rename(&partial, &path).map_err(out));
    if let Err(e) = written {
        let _ = fs::remove_file(&partial);
        return Err(e);
    }
    Ok(path)
}
