use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{M0Mode, OptimizerSpec, RunConfig, RANDOM_SEARCH_BOX};
use crate::error::{Error, Result};
use crate::objectives::{Function, ShiftMode};
use crate::syncma::{EtaCMode, SynCmaConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Syncma,
    Cmaes,
    Rs,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "syncma" => Ok(Self::Syncma),
            "cmaes" => Ok(Self::Cmaes),
            "rs" => Ok(Self::Rs),
            other => Err(Error::InvalidConfig(format!("unknown optimizer `{other}`"))),
        }
    }
}

/// One run described as a TOML document. Unknown keys are rejected.
///
/// ```toml
/// function = "sphere"
/// dim = 32
/// optimizer = "syncma"
/// lambda0 = 2.0
/// eta_c_mode = { cma_scaled = 2.0 }
/// m0_mode = { seeded_uniform = [-3.0, 3.0] }
/// shift_mode = "zero"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub function: Function,
    pub dim: usize,
    pub optimizer: OptimizerKind,
    #[serde(default = "defaults::lambda0")]
    pub lambda0: f64,
    #[serde(default = "defaults::z_m")]
    pub z_m: f64,
    #[serde(default)]
    pub eta_c_mode: EtaCMode,
    #[serde(default = "defaults::sigma0")]
    pub sigma0: f64,
    #[serde(default)]
    pub population: Option<usize>,
    #[serde(default = "defaults::budget")]
    pub budget: usize,
    #[serde(default = "defaults::trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub m0_mode: M0Mode,
    #[serde(default = "defaults::threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub shift_mode: ShiftMode,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

mod defaults {
    pub fn lambda0() -> f64 {
        2.0
    }
    pub fn z_m() -> f64 {
        10.0
    }
    pub fn sigma0() -> f64 {
        0.1
    }
    pub fn budget() -> usize {
        10_000
    }
    pub fn trials() -> usize {
        20
    }
    pub fn threshold() -> f64 {
        0.5
    }
}

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn into_run_config(self) -> RunConfig {
        let optimizer = match self.optimizer {
            OptimizerKind::Syncma => OptimizerSpec::SynCma(SynCmaConfig {
                lambda0: self.lambda0,
                z_m: self.z_m,
                eta_c_mode: self.eta_c_mode,
                sigma0: self.sigma0,
                population: self.population,
                ..SynCmaConfig::default()
            }),
            OptimizerKind::Cmaes => OptimizerSpec::CmaEs {
                sigma0: self.sigma0,
            },
            OptimizerKind::Rs => OptimizerSpec::RandomSearch {
                lo: RANDOM_SEARCH_BOX.0,
                hi: RANDOM_SEARCH_BOX.1,
            },
        };
        RunConfig {
            function: self.function,
            dim: self.dim,
            shift_mode: self.shift_mode,
            optimizer,
            population: self.population,
            trials: self.trials,
            budget: self.budget,
            base_seed: self.seed,
            m0_mode: self.m0_mode,
            hit_threshold: self.threshold,
            output_dir: self.output_dir,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_document() {
        let text = r#"
            function = "rastrigin"
            dim = 32
            optimizer = "syncma"
            lambda0 = 4.0
            z_m = 10.0
            eta_c_mode = { absolute = 50.0 }
            sigma0 = 0.1
            population = 64
            budget = 10000
            trials = 20
            seed = 7
            m0_mode = { seeded_uniform = [-3.0, 3.0] }
            threshold = 0.5
            shift_mode = { fixed = [1.0, 2.0] }
            output_dir = "out/rastrigin"
        "#;
        let c = FileConfig::from_toml(text).unwrap();
        assert_eq!(c.function, Function::Rastrigin);
        assert_eq!(c.eta_c_mode, EtaCMode::Absolute(50.0));
        assert_eq!(c.shift_mode, ShiftMode::Fixed(vec![1.0, 2.0]));
        let run = c.into_run_config();
        assert_eq!(run.base_seed, 7);
        assert_eq!(run.optimizer.lambda0(), Some(4.0));
        assert_eq!(run.population(), 64);
    }

    #[test]
    fn defaults_fill_in() {
        let c = FileConfig::from_toml("function = \"sphere\"\ndim = 8\noptimizer = \"cmaes\"\n")
            .unwrap();
        assert_eq!(c.m0_mode, M0Mode::SeededUniform(-3.0, 3.0));
        assert_eq!(c.shift_mode, ShiftMode::Zero);
        assert_eq!((c.budget, c.trials, c.threshold), (10_000, 20, 0.5));
        let s = FileConfig::from_toml("function = \"sphere\"\ndim = 8\noptimizer = \"rs\"\nshift_mode = { seeded_uniform = [-1.0, 1.0] }\n").unwrap();
        assert_eq!(s.shift_mode, ShiftMode::SeededUniform(-1.0, 1.0));
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = FileConfig::from_toml(
            "function = \"sphere\"\ndim = 8\noptimizer = \"rs\"\nlearning_rate = 1.0\n",
        );
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
        assert!(
            FileConfig::from_toml("function = \"nope\"\ndim = 8\noptimizer = \"rs\"\n").is_err()
        );
    }
}
