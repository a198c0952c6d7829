use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::stats::{summarize, Band, SummaryStats};
use super::{run_trials, RunConfig, TracePoint, TrialTrace};
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "trial,evaluations,best_value";

/// Per-run summary document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub function: String,
    pub dim: usize,
    pub optimizer: String,
    pub lambda0: Option<f64>,
    pub median_best: f64,
    pub q25: f64,
    pub q75: f64,
    pub median_hit_evals: Option<f64>,
    pub trials: usize,
    pub budget: usize,
}

impl Summary {
    pub fn new(config: &RunConfig, stats: &SummaryStats) -> Self {
        Self {
            function: config.function.name().to_string(),
            dim: config.dim,
            optimizer: config.optimizer.label().to_string(),
            lambda0: config.optimizer.lambda0(),
            median_best: stats.median_best,
            q25: stats.q25,
            q75: stats.q75,
            median_hit_evals: stats.median_hit_evals,
            trials: config.trials,
            budget: config.budget,
        }
    }
}

/// One row per generation per trial, trials in order.
pub fn write_csv<W: Write>(mut out: W, traces: &[TrialTrace]) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for t in traces {
        for p in &t.points {
            writeln!(out, "{},{},{}", t.trial, p.evaluations, p.best_value)?;
        }
    }
    out.flush()
}

pub fn read_trace_csv<R: BufRead>(input: R) -> Result<Vec<TrialTrace>> {
    let bad =
        |line: usize, msg: &str| Error::InvalidConfig(format!("trace csv line {line}: {msg}"));
    let mut lines = input.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == TRACE_HEADER => {}
        _ => return Err(bad(1, "missing header")),
    }
    let mut traces: Vec<TrialTrace> = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| bad(k + 2, &e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad(k + 2, "expected 3 fields"));
        }
        let trial: usize = fields[0].parse().map_err(|_| bad(k + 2, "trial"))?;
        let evaluations: usize = fields[1].parse().map_err(|_| bad(k + 2, "evaluations"))?;
        let best_value: f64 = fields[2].parse().map_err(|_| bad(k + 2, "best_value"))?;
        if traces.last().map(|t| t.trial) != Some(trial) {
            traces.push(TrialTrace {
                trial,
                points: Vec::new(),
                failure: None,
            });
        }
        traces.last_mut().expect("pushed").points.push(TracePoint {
            evaluations,
            best_value,
        });
    }
    Ok(traces)
}

pub fn write_bands_csv<W: Write>(mut out: W, bands: &[Band]) -> io::Result<()> {
    writeln!(out, "evaluations,median,q25,q75")?;
    for b in bands {
        writeln!(out, "{},{},{},{}", b.evaluations, b.median, b.q25, b.q75)?;
    }
    out.flush()
}

pub fn write_summary<W: Write>(mut out: W, summary: &Summary) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, summary)?;
    writeln!(out)?;
    out.flush()
}

/// Writes `trace.csv`, `bands.csv` and `summary.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    config: &RunConfig,
    traces: &[TrialTrace],
    stats: &SummaryStats,
) -> io::Result<Summary> {
    fs::create_dir_all(dir)?;
    let summary = Summary::new(config, stats);
    write_csv(
        io::BufWriter::new(fs::File::create(dir.join("trace.csv"))?),
        traces,
    )?;
    write_bands_csv(
        io::BufWriter::new(fs::File::create(dir.join("bands.csv"))?),
        &stats.bands,
    )?;
    write_summary(
        io::BufWriter::new(fs::File::create(dir.join("summary.json"))?),
        &summary,
    )?;
    Ok(summary)
}

/// Runs every config and writes its results under its `output_dir`, if set.
pub fn run_suite(configs: &[RunConfig]) -> Result<Vec<(Vec<TrialTrace>, Summary)>> {
    configs
        .iter()
        .map(|config| {
            let traces = run_trials(config)?;
            let stats = summarize(&traces, config.hit_threshold);
            let summary = match &config.output_dir {
                Some(dir) => write_outputs(dir, config, &traces, &stats)
                    .map_err(|e| Error::InvalidConfig(format!("writing {}: {e}", dir.display())))?,
                None => Summary::new(config, &stats),
            };
            Ok((traces, summary))
        })
        .collect()
}
