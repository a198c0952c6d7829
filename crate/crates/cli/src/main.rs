use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use syncma_core::diagnostics::{bridge_run, oracle_run};
use syncma_core::harness::{
    run_suite, run_trials, summarize, write_outputs, FileConfig, OptimizerKind, OptimizerSpec,
    RunConfig, Summary, RANDOM_SEARCH_BOX,
};
use syncma_core::objectives::Function;
use syncma_core::syncma::SynCmaConfig;

const MEMORY_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-9;
const BRIDGE_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(
    name = "syncma",
    version,
    about = "SynCMA trial runner and self-checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials of one optimizer on one function.
    Run(RunArgs),
    /// Run every config file and write each result under its output_dir.
    Suite {
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
    },
    /// Check the memory terms against a brute-force history sum along a
    /// random trajectory and print the largest deviations.
    Verify {
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 2.0)]
        lambda0: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        probes: usize,
    },
    /// Compare the history-free update with the CMA-ES rank-μ update.
    ReduceCheck {
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 50)]
        generations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    function: Function,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value = "syncma")]
    optimizer: OptimizerKind,
    #[arg(long, default_value_t = 2.0)]
    lambda0: f64,
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples per generation; defaults to 2·dim.
    #[arg(long)]
    population: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Directory for trace.csv, bands.csv and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self) -> RunConfig {
        let optimizer = match self.optimizer {
            OptimizerKind::Syncma => OptimizerSpec::SynCma(SynCmaConfig {
                population: self.population,
                ..SynCmaConfig::with_lambda0(self.lambda0)
            }),
            OptimizerKind::Cmaes => OptimizerSpec::CmaEs { sigma0: 0.1 },
            OptimizerKind::Rs => OptimizerSpec::RandomSearch {
                lo: RANDOM_SEARCH_BOX.0,
                hi: RANDOM_SEARCH_BOX.1,
            },
        };
        RunConfig {
            population: self.population,
            trials: self.trials,
            budget: self.budget,
            base_seed: self.seed,
            hit_threshold: self.threshold,
            output_dir: self.out,
            ..RunConfig::new(self.function, self.dim, optimizer)
        }
    }
}

fn summary_line(s: &Summary) -> String {
    let hit = s
        .median_hit_evals
        .map_or_else(|| "-".to_string(), |h| format!("{h:.0}"));
    let lambda0 = s
        .lambda0
        .map_or_else(String::new, |l| format!(" lambda0={l}"));
    format!(
        "{} n={} {}{}: median_best={:.6e} q25={:.6e} q75={:.6e} median_hit={}",
        s.function, s.dim, s.optimizer, lambda0, s.median_best, s.q25, s.q75, hit
    )
}

/// Runs one command, writing its report to `out`. `Ok(false)` means a
/// self-check exceeded its tolerance.
fn run(cli: Cli, out: &mut dyn Write) -> Result<bool, String> {
    let (ok, report) = match cli.command {
        Command::Run(args) => {
            let config = args.into_config();
            let traces = run_trials(&config).map_err(|e| e.to_string())?;
            let stats = summarize(&traces, config.hit_threshold);
            let summary = match &config.output_dir {
                Some(dir) => write_outputs(dir, &config, &traces, &stats)
                    .map_err(|e| format!("writing {}: {e}", dir.display()))?,
                None => Summary::new(&config, &stats),
            };
            for t in traces.iter().filter(|t| t.failure.is_some()) {
                let reason = t.failure.as_deref().unwrap_or("");
                eprintln!("trial {} stopped early: {reason}", t.trial);
            }
            (true, summary_line(&summary))
        }
        Command::Suite { configs } => {
            let runs = configs
                .iter()
                .map(|path| {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| format!("{}: {e}", path.display()))?;
                    FileConfig::from_toml(&text)
                        .map(FileConfig::into_run_config)
                        .map_err(|e| format!("{}: {e}", path.display()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let results = run_suite(&runs).map_err(|e| e.to_string())?;
            let lines: Vec<String> = results.iter().map(|(_, s)| summary_line(s)).collect();
            (true, lines.join("\n"))
        }
        Command::Verify {
            dim,
            steps,
            lambda0,
            seed,
            probes,
        } => {
            let r = oracle_run(dim, steps, lambda0, seed, probes).map_err(|e| e.to_string())?;
            let ok = r.within(MEMORY_TOL, RESIDUAL_TOL);
            let report = format!(
                "steps={} dim={dim} lambda0={lambda0} probes={probes}\n\
                 max memory deviation    {:.3e} (tol {MEMORY_TOL:e})\n\
                 max mean residual       {:.3e} (tol {RESIDUAL_TOL:e})\n\
                 max covariance residual {:.3e} (tol {RESIDUAL_TOL:e})\n\
                 {}",
                r.steps,
                r.memory,
                r.residual_mean,
                r.residual_cov,
                verdict(ok)
            );
            (ok, report)
        }
        Command::ReduceCheck {
            dim,
            generations,
            seed,
        } => {
            let gap = bridge_run(dim, generations, seed).map_err(|e| e.to_string())?;
            let ok = gap <= BRIDGE_TOL;
            let report = format!(
                "dim={dim} generations={generations}\n\
                 max elementwise difference {gap:.3e} (tol {BRIDGE_TOL:e})\n\
                 {}",
                verdict(ok)
            );
            (ok, report)
        }
    };
    writeln!(out, "{report}").map_err(|e| format!("writing output: {e}"))?;
    Ok(ok)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

fn main() -> ExitCode {
    match run(Cli::parse(), &mut std::io::stdout().lock()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
