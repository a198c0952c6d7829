//! Synthetic benchmark functions. Each function has its global minimum 0 at
//! the spec's shift vector: `f(x) = base(x − shift)` with `base(0) = 0`.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Function {
    Sphere,
    Discus,
    Schwefel,
    DiffPowers,
    Bohachevsky,
    LevyMontalvo,
    Rastrigin,
    Ackley,
    Schaffer,
    Rosenbrock,
}

impl Function {
    pub const ALL: [Function; 10] = [
        Function::Sphere,
        Function::Discus,
        Function::Schwefel,
        Function::DiffPowers,
        Function::Bohachevsky,
        Function::LevyMontalvo,
        Function::Rastrigin,
        Function::Ackley,
        Function::Schaffer,
        Function::Rosenbrock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Function::Sphere => "sphere",
            Function::Discus => "discus",
            Function::Schwefel => "schwefel",
            Function::DiffPowers => "diffpowers",
            Function::Bohachevsky => "bohachevsky",
            Function::LevyMontalvo => "levymontalvo",
            Function::Rastrigin => "rastrigin",
            Function::Ackley => "ackley",
            Function::Schaffer => "schaffer",
            Function::Rosenbrock => "rosenbrock",
        }
    }

    /// Value of the unshifted form at `y`.
    pub fn base(self, y: &[f64]) -> f64 {
        let n = y.len();
        let nf = n as f64;
        match self {
            Function::Sphere => y.iter().map(|v| v * v).sum(),
            Function::Discus => 1e6 * y[0] * y[0] + y[1..].iter().map(|v| v * v).sum::<f64>(),
            Function::Schwefel => {
                let s: f64 = y.iter().map(|v| v.abs()).sum();
                let p: f64 = y.iter().map(|v| v.abs()).product();
                s + p
            }
            Function::DiffPowers => y
                .iter()
                .enumerate()
                .map(|(i, v)| v.abs().powf(2.0 + 4.0 * i as f64 / nf))
                .sum(),
            Function::Bohachevsky => y
                .windows(2)
                .map(|p| {
                    0.7 + p[0] * p[0] + 2.0 * p[1] * p[1]
                        - 0.3 * (3.0 * PI * p[0]).cos()
                        - 0.4 * (4.0 * PI * p[1]).cos()
                })
                .sum(),
            Function::LevyMontalvo => {
                // w = 1 + y/4 puts the optimum at y = 0
                let w: Vec<f64> = y.iter().map(|v| 1.0 + v / 4.0).collect();
                let sin2 = |v: f64| (PI * v).sin().powi(2);
                let inner: f64 = w
                    .windows(2)
                    .map(|p| (p[0] - 1.0).powi(2) * (1.0 + 10.0 * sin2(p[1])))
                    .sum();
                (PI / nf) * (10.0 * sin2(w[0]) + (w[n - 1] - 1.0).powi(2) + inner)
            }
            Function::Rastrigin => {
                10.0 * nf
                    + y.iter()
                        .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
                        .sum::<f64>()
            }
            Function::Ackley => {
                let sq: f64 = y.iter().map(|v| v * v).sum::<f64>() / nf;
                let cs: f64 = y.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / nf;
                (-20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E).max(0.0)
            }
            Function::Schaffer => y
                .windows(2)
                .map(|p| {
                    let z = p[0] * p[0] + p[1] * p[1];
                    z.powf(0.25) * ((50.0 * z.powf(0.1)).sin().powi(2) + 1.0)
                })
                .sum(),
            Function::Rosenbrock => {
                // v = y + 1 puts the optimum at y = 0
                y.windows(2)
                    .map(|p| {
                        let (a, b) = (p[0] + 1.0, p[1] + 1.0);
                        100.0 * (b - a * a).powi(2) + (a - 1.0).powi(2)
                    })
                    .sum()
            }
        }
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Function {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Function::ALL
            .into_iter()
            .find(|f| f.name() == lower)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown function `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    #[default]
    Zero,
    Fixed(Vec<f64>),
    SeededUniform(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub function: Function,
    pub shift: Vector,
    pub budget: usize,
}

impl ObjectiveSpec {
    pub fn dim(&self) -> usize {
        self.shift.len()
    }
}

pub fn make_spec(
    function: Function,
    dim: usize,
    shift_mode: &ShiftMode,
    budget: usize,
    seed: u64,
) -> Result<ObjectiveSpec> {
    if dim < 2 {
        return Err(Error::InvalidConfig(format!(
            "dimension must be >= 2, got {dim}"
        )));
    }
    let shift = match shift_mode {
        ShiftMode::Zero => Vector::zeros(dim),
        ShiftMode::Fixed(v) => {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            Vector::from_column_slice(v)
        }
        &ShiftMode::SeededUniform(lo, hi) => {
            if !(lo < hi) {
                return Err(Error::InvalidConfig(format!(
                    "empty shift box [{lo}, {hi}]"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(0x0053_4849_4654);
            Vector::from_fn(dim, |_, _| rng.random_range(lo..hi))
        }
    };
    Ok(ObjectiveSpec {
        function,
        shift,
        budget,
    })
}

pub fn evaluate(spec: &ObjectiveSpec, x: &Vector) -> Result<f64> {
    if x.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: x.len(),
        });
    }
    let y = x - &spec.shift;
    Ok(spec.function.base(y.as_slice()))
}

/// Budget-enforcing evaluator owned by a single trial.
#[derive(Debug, Clone)]
pub struct CountingEvaluator {
    spec: ObjectiveSpec,
    evals_used: usize,
}

impl CountingEvaluator {
    pub fn new(spec: ObjectiveSpec) -> Self {
        Self {
            spec,
            evals_used: 0,
        }
    }

    pub fn spec(&self) -> &ObjectiveSpec {
        &self.spec
    }

    pub fn evals_used(&self) -> usize {
        self.evals_used
    }

    pub fn remaining(&self) -> usize {
        self.spec.budget - self.evals_used
    }

    pub fn batch_evaluate(&mut self, xs: &[Vector]) -> Result<Vec<f64>> {
        if self.evals_used + xs.len() > self.spec.budget {
            return Err(Error::BudgetExhausted {
                used: self.evals_used,
                requested: xs.len(),
                budget: self.spec.budget,
            });
        }
        let values = xs
            .iter()
            .map(|x| evaluate(&self.spec, x))
            .collect::<Result<Vec<_>>>()?;
        self.evals_used += xs.len();
        Ok(values)
    }
}
