//! Seeded trial runner: ask → evaluate → rank → tell until the evaluation
//! budget is exhausted, recording the best-so-far value once per generation.

mod config;
mod output;
pub mod stats;

use std::path::PathBuf;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cmaes::CmaEs;
use crate::error::{Error, Result};
use crate::fitness::WeightScheme;
use crate::gaussian::Vector;
use crate::objectives::{make_spec, CountingEvaluator, Function, ShiftMode};
use crate::syncma::{SynCma, SynCmaConfig};

pub use config::{FileConfig, OptimizerKind};
pub use output::{
    read_trace_csv, run_suite, write_bands_csv, write_csv, write_outputs, write_summary, Summary,
};
pub use stats::{first_hitting_time, summarize, SummaryStats};

/// Default box for random search.
pub const RANDOM_SEARCH_BOX: (f64, f64) = (-5.0, 5.0);

#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerSpec {
    SynCma(SynCmaConfig),
    CmaEs { sigma0: f64 },
    RandomSearch { lo: f64, hi: f64 },
}

impl OptimizerSpec {
    pub fn label(&self) -> &'static str {
        match self {
            OptimizerSpec::SynCma(_) => "syncma",
            OptimizerSpec::CmaEs { .. } => "cmaes",
            OptimizerSpec::RandomSearch { .. } => "rs",
        }
    }

    pub fn lambda0(&self) -> Option<f64> {
        match self {
            OptimizerSpec::SynCma(c) => Some(c.lambda0),
            _ => None,
        }
    }
}

/// Initial mean of each trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum M0Mode {
    Fixed(Vec<f64>),
    /// Uniform in `[lo, hi]ⁿ`, drawn from the trial's own stream.
    SeededUniform(f64, f64),
}

impl Default for M0Mode {
    fn default() -> Self {
        M0Mode::SeededUniform(-3.0, 3.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub function: Function,
    pub dim: usize,
    pub shift_mode: ShiftMode,
    pub optimizer: OptimizerSpec,
    /// `None` means `2n`.
    pub population: Option<usize>,
    pub trials: usize,
    pub budget: usize,
    pub base_seed: u64,
    pub m0_mode: M0Mode,
    pub hit_threshold: f64,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(function: Function, dim: usize, optimizer: OptimizerSpec) -> Self {
        Self {
            function,
            dim,
            shift_mode: ShiftMode::Zero,
            optimizer,
            population: None,
            trials: 20,
            budget: 10_000,
            base_seed: 0,
            m0_mode: M0Mode::default(),
            hit_threshold: 0.5,
            output_dir: None,
        }
    }

    pub fn population(&self) -> usize {
        match (&self.optimizer, self.population) {
            (_, Some(p)) => p,
            (OptimizerSpec::SynCma(c), None) => c.population_for(self.dim),
            _ => 2 * self.dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        let population = self.population();
        if population < 2 {
            return Err(Error::InvalidConfig(format!(
                "population must be >= 2, got {population}"
            )));
        }
        if population > self.budget {
            return Err(Error::InvalidConfig(format!(
                "population {population} exceeds budget {}",
                self.budget
            )));
        }
        if let M0Mode::Fixed(v) = &self.m0_mode {
            if v.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub evaluations: usize,
    pub best_value: f64,
}

/// Best-so-far curve of one trial, one point per generation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    pub trial: usize,
    pub points: Vec<TracePoint>,
    /// Set when the optimizer stopped early (e.g. covariance degeneration).
    pub failure: Option<String>,
}

/// Uniform sampling over a box; `tell` is a no-op.
#[derive(Debug, Clone)]
pub struct RandomSearch {
    pub lo: f64,
    pub hi: f64,
    pub dim: usize,
    pub population: usize,
}

pub fn random_search_step<R: Rng + ?Sized>(
    lo: f64,
    hi: f64,
    dim: usize,
    count: usize,
    rng: &mut R,
) -> Vec<Vector> {
    (0..count)
        .map(|_| Vector::from_fn(dim, |_, _| rng.random_range(lo..=hi)))
        .collect()
}

/// Minimal ask/tell surface shared by the optimizers the harness drives.
pub trait AskTell {
    fn ask(&mut self, rng: &mut dyn RngCore) -> Result<Vec<Vector>>;
    fn tell(&mut self, samples: Vec<Vector>, values: Vec<f64>) -> Result<()>;
}

impl AskTell for SynCma {
    fn ask(&mut self, rng: &mut dyn RngCore) -> Result<Vec<Vector>> {
        SynCma::ask(self, rng)
    }

    fn tell(&mut self, samples: Vec<Vector>, values: Vec<f64>) -> Result<()> {
        self.tell_values(samples, values)
    }
}

impl AskTell for CmaEs {
    fn ask(&mut self, rng: &mut dyn RngCore) -> Result<Vec<Vector>> {
        Ok(CmaEs::ask(self, rng))
    }

    fn tell(&mut self, samples: Vec<Vector>, values: Vec<f64>) -> Result<()> {
        CmaEs::tell(self, &samples, &values)
    }
}

impl AskTell for RandomSearch {
    fn ask(&mut self, rng: &mut dyn RngCore) -> Result<Vec<Vector>> {
        Ok(random_search_step(
            self.lo,
            self.hi,
            self.dim,
            self.population,
            rng,
        ))
    }

    fn tell(&mut self, _samples: Vec<Vector>, _values: Vec<f64>) -> Result<()> {
        Ok(())
    }
}

/// Random stream of trial `index`: ChaCha8 seeded with `base_seed + index`.
pub fn trial_rng(base_seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(index as u64))
}

fn build_optimizer(config: &RunConfig, m0: Vector) -> Result<Box<dyn AskTell>> {
    let population = config.population();
    Ok(match &config.optimizer {
        OptimizerSpec::SynCma(c) => {
            let c = SynCmaConfig {
                population: Some(population),
                ..c.clone()
            };
            Box::new(SynCma::new(m0, c)?)
        }
        OptimizerSpec::CmaEs { sigma0 } => Box::new(CmaEs::new(
            m0,
            *sigma0,
            population,
            WeightScheme::default(),
        )?),
        &OptimizerSpec::RandomSearch { lo, hi } => {
            if !(lo < hi) {
                return Err(Error::InvalidConfig(format!(
                    "empty search box [{lo}, {hi}]"
                )));
            }
            Box::new(RandomSearch {
                lo,
                hi,
                dim: config.dim,
                population,
            })
        }
    })
}

/// Runs one seeded trial to budget exhaustion.
pub fn run_trial(config: &RunConfig, trial_index: usize) -> Result<TrialTrace> {
    config.validate()?;
    let spec = make_spec(
        config.function,
        config.dim,
        &config.shift_mode,
        config.budget,
        config.base_seed,
    )?;
    let mut rng = trial_rng(config.base_seed, trial_index);
    let m0 = match &config.m0_mode {
        M0Mode::Fixed(v) => Vector::from_column_slice(v),
        &M0Mode::SeededUniform(lo, hi) => {
            Vector::from_fn(config.dim, |_, _| rng.random_range(lo..=hi))
        }
    };
    let mut optimizer = build_optimizer(config, m0)?;
    let mut evaluator = CountingEvaluator::new(spec);
    let mut best = f64::INFINITY;
    let mut points = Vec::new();
    let mut failure = None;

    loop {
        let samples = match optimizer.ask(&mut rng) {
            Ok(s) => s,
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        };
        let values = match evaluator.batch_evaluate(&samples) {
            Ok(v) => v,
            Err(Error::BudgetExhausted { .. }) => break,
            Err(e) => return Err(e),
        };
        best = values.iter().copied().fold(best, f64::min);
        points.push(TracePoint {
            evaluations: evaluator.evals_used(),
            best_value: best,
        });
        if let Err(e) = optimizer.tell(samples, values) {
            failure = Some(e.to_string());
            break;
        }
    }
    Ok(TrialTrace {
        trial: trial_index,
        points,
        failure,
    })
}

/// All trials of a config, in trial order.
pub fn run_trials(config: &RunConfig) -> Result<Vec<TrialTrace>> {
    config.validate()?;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..config.trials)
            .into_par_iter()
            .map(|i| run_trial(config, i))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..config.trials).map(|i| run_trial(config, i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(optimizer: OptimizerSpec) -> RunConfig {
        RunConfig {
            trials: 2,
            budget: 400,
            ..RunConfig::new(Function::Sphere, 4, optimizer)
        }
    }

    #[test]
    fn one_generation_budget() {
        let config = RunConfig {
            budget: 8,
            ..small(OptimizerSpec::SynCma(SynCmaConfig::default()))
        };
        let t = run_trial(&config, 0).unwrap();
        assert_eq!(t.points.len(), 1);
        assert_eq!(t.points[0].evaluations, 8);
    }

    #[test]
    fn traces_are_reproducible_and_monotone() {
        for opt in [
            OptimizerSpec::SynCma(SynCmaConfig::default()),
            OptimizerSpec::CmaEs { sigma0: 0.1 },
            OptimizerSpec::RandomSearch { lo: -5.0, hi: 5.0 },
        ] {
            let config = small(opt);
            let a = run_trial(&config, 1).unwrap();
            assert_eq!(a, run_trial(&config, 1).unwrap());
            assert_ne!(a, run_trial(&config, 0).unwrap());
            assert!(a.failure.is_none());
            assert_eq!(a.points.len(), 50);
            for (k, w) in a.points.windows(2).enumerate() {
                assert!(w[1].best_value <= w[0].best_value);
                assert_eq!(w[1].evaluations, w[0].evaluations + 8, "step {k}");
            }
        }
    }

    #[test]
    fn random_search_stays_in_box() {
        let mut rng = trial_rng(3, 0);
        let xs = random_search_step(-1.0, 1.0, 1, 20_000, &mut rng);
        assert!(xs.iter().all(|x| (-1.0..=1.0).contains(&x[0])));
        let mean: f64 = xs.iter().map(|x| x[0]).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.05);
        let again = random_search_step(-1.0, 1.0, 1, 20_000, &mut trial_rng(3, 0));
        assert_eq!(xs, again);
    }

    #[test]
    fn invalid_configs() {
        let mut c = small(OptimizerSpec::CmaEs { sigma0: 0.1 });
        c.budget = 4;
        assert!(run_trial(&c, 0).is_err());
        let mut c = small(OptimizerSpec::CmaEs { sigma0: 0.1 });
        c.trials = 0;
        assert!(run_trials(&c).is_err());
        let mut c = small(OptimizerSpec::CmaEs { sigma0: 0.1 });
        c.m0_mode = M0Mode::Fixed(vec![0.0; 3]);
        assert!(run_trial(&c, 0).is_err());
    }

    #[test]
    fn syncma_reaches_threshold_on_sphere() {
        let config = RunConfig {
            budget: 5000,
            trials: 1,
            ..RunConfig::new(
                Function::Sphere,
                8,
                OptimizerSpec::SynCma(SynCmaConfig::default()),
            )
        };
        let t = run_trial(&config, 0).unwrap();
        assert!(t.points.last().unwrap().best_value < 0.5);
    }
}
