//! SynCMA: a full-covariance Gaussian evolution strategy whose mean and
//! covariance are updated together from one natural Lagrange condition, with
//! an exponentially decayed history of reweighted-KL objectives carried in
//! constant-size memory.
//!
//! The memory gradient at a probe `(m, C)` is
//!
//! ```text
//! mean: λ₀ (ŝ_m − m)
//! cov:  λ₀ ((ŝ_c − m)(ŝ_c − m)ᵀ − C) + Q1 + Q2∘m + Q3 m mᵀ
//! ```
//!
//! with `a∘b = abᵀ + baᵀ`. After each generation it is replaced by
//! `λ (memory − KL-gradient of that generation)`, which the memory terms
//! reproduce exactly (see `crate::oracle`).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cmaes::CmaConstants;
use crate::error::{Error, Result};
use crate::fitness::{self, WeightScheme};
use crate::gaussian::{
    is_spd, outer, sample_population, sym_outer, symmetrize, GaussianParams, Matrix, Vector,
};

/// How the covariance learning-rate multiplier η_c is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaCMode {
    /// Use this η_c directly.
    Absolute(f64),
    /// `z_c = factor / c_μ`, with c_μ the CMA-ES rank-μ rate for (n, N).
    CmaScaled(f64),
}

impl Default for EtaCMode {
    fn default() -> Self {
        EtaCMode::CmaScaled(2.0)
    }
}

/// Where the `Q2∘m + Q3 m mᵀ` part of the covariance update is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QEvalPoint {
    /// At the mean the generation was sampled from.
    CurrentMean,
    /// At the updated mean, which makes the update an exact stationary point
    /// of the Lagrange condition.
    #[default]
    NextMean,
}

/// Update rule for the `Q2`, `Q3` memory coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemoryRule {
    /// Coefficients that reproduce the decayed history sum exactly.
    #[default]
    Exact,
    /// `Q2 ← λQ2 − λ₀(ζ+α−2)(ζŝ_c + α d̂_w)`, `Q3 ← λQ3 − λ₀(ζ−1)(α−1)`.
    /// Does not satisfy the history recurrence; kept for comparison runs.
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynCmaConfig {
    pub lambda0: f64,
    pub z_m: f64,
    pub eta_c_mode: EtaCMode,
    pub sigma0: f64,
    /// `None` means `2n`.
    pub population: Option<usize>,
    pub weight_scheme: WeightScheme,
    pub q_eval_point: QEvalPoint,
    pub memory_rule: MemoryRule,
}

impl Default for SynCmaConfig {
    fn default() -> Self {
        Self {
            lambda0: 2.0,
            z_m: 10.0,
            eta_c_mode: EtaCMode::default(),
            sigma0: 0.1,
            population: None,
            weight_scheme: WeightScheme::default(),
            q_eval_point: QEvalPoint::default(),
            memory_rule: MemoryRule::default(),
        }
    }
}

impl SynCmaConfig {
    pub fn with_lambda0(lambda0: f64) -> Self {
        Self {
            lambda0,
            ..Self::default()
        }
    }

    pub fn population_for(&self, dim: usize) -> usize {
        self.population.unwrap_or(2 * dim)
    }
}

/// Coefficients derived from a config for a fixed dimension and population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub lambda0: f64,
    /// History decay `λ₀ / (λ₀ + 1)`.
    pub lambda: f64,
    /// `√λ`
    pub zeta: f64,
    /// `√(1 − λ)`
    pub alpha: f64,
    pub eta_m: f64,
    pub z_m: f64,
    pub eta_c: f64,
    pub z_c: f64,
}

impl Rates {
    pub fn resolve(config: &SynCmaConfig, dim: usize) -> Result<Self> {
        let lambda0 = config.lambda0;
        if !(lambda0 >= 0.0) || !lambda0.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "lambda0 must be >= 0, got {lambda0}"
            )));
        }
        let eta_m = config.z_m - lambda0 - 1.0;
        if !(eta_m > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "z_m must exceed 1 + lambda0 ({}), got {}",
                1.0 + lambda0,
                config.z_m
            )));
        }
        let population = config.population_for(dim);
        if population < 2 {
            return Err(Error::InvalidConfig(format!(
                "population must be >= 2, got {population}"
            )));
        }
        let eta_c = match config.eta_c_mode {
            EtaCMode::Absolute(v) => v,
            EtaCMode::CmaScaled(factor) => {
                let c_mu = CmaConstants::new(dim, population, &config.weight_scheme).c_mu;
                factor / c_mu - lambda0 - 1.0
            }
        };
        if !(eta_c >= 0.0) || !eta_c.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "eta_c must be >= 0, got {eta_c}"
            )));
        }
        let lambda = lambda0 / (lambda0 + 1.0);
        Ok(Self {
            lambda0,
            lambda,
            zeta: lambda.sqrt(),
            alpha: (1.0 - lambda).sqrt(),
            eta_m,
            z_m: config.z_m,
            eta_c,
            z_c: eta_c + lambda0 + 1.0,
        })
    }
}

/// Distribution parameters plus the evolved memory terms.
#[derive(Debug, Clone, PartialEq)]
pub struct SynCmaState {
    pub params: GaussianParams,
    /// `ŝ_m = s_m + m`
    pub s_m_hat: Vector,
    /// `ŝ_c = s_c + m`
    pub s_c_hat: Vector,
    pub q1: Matrix,
    pub q2: Vector,
    pub q3: f64,
    pub t: usize,
}

impl SynCmaState {
    /// Zero memory at `m0` with covariance `sigma0 · I`.
    pub fn initial(m0: Vector, sigma0: f64) -> Self {
        let n = m0.len();
        Self {
            s_m_hat: m0.clone(),
            s_c_hat: m0.clone(),
            q1: Matrix::zeros(n, n),
            q2: Vector::zeros(n),
            q3: 0.0,
            t: 0,
            params: GaussianParams::isotropic(m0, sigma0),
        }
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// Memory gradient at an arbitrary probe point.
    pub fn grad_m(&self, rates: &Rates, probe: &GaussianParams) -> (Vector, Matrix) {
        let mean = (&self.s_m_hat - &probe.mean) * rates.lambda0;
        let mut cov = self.memory_cov_at(rates, &probe.mean, &probe.cov, &probe.mean);
        symmetrize(&mut cov);
        (mean, cov)
    }

    /// Covariance memory gradient with the `Q` polynomial evaluated at `q_point`.
    pub(crate) fn memory_cov_at(
        &self,
        rates: &Rates,
        mean: &Vector,
        cov: &Matrix,
        q_point: &Vector,
    ) -> Matrix {
        let s = &self.s_c_hat - mean;
        (outer(&s) - cov) * rates.lambda0 + self.q_poly(q_point)
    }

    /// `Q1 + Q2∘m + Q3 m mᵀ`.
    pub fn q_poly(&self, m: &Vector) -> Matrix {
        &self.q1 + sym_outer(&self.q2, m) + outer(m) * self.q3
    }
}

/// One batch of samples with their rank weights and the mean they were drawn at.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub samples: Vec<Vector>,
    /// Objective values; empty when weights were injected directly.
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub mean_at_sampling: Vector,
}

impl GenerationRecord {
    pub fn from_values(
        samples: Vec<Vector>,
        values: Vec<f64>,
        scheme: &WeightScheme,
        mean_at_sampling: Vector,
    ) -> Result<Self> {
        if samples.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                found: values.len(),
            });
        }
        let weights = fitness::assign(&values, scheme)?;
        Ok(Self {
            samples,
            values,
            weights,
            mean_at_sampling,
        })
    }

    pub fn with_weights(samples: Vec<Vector>, weights: Vec<f64>, mean_at_sampling: Vector) -> Self {
        Self {
            samples,
            values: Vec::new(),
            weights,
            mean_at_sampling,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.samples.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.samples.len(),
                found: self.weights.len(),
            });
        }
        if self.mean_at_sampling.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.mean_at_sampling.len(),
            });
        }
        if let Some(x) = self.samples.iter().find(|x| x.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        if let Some(index) = self.weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(())
    }
}

struct GenerationStats {
    deviations: Vec<Vector>,
    /// `d_w = Σ ŵ_i d_i`
    d_w: Vector,
}

fn generation_stats(m: &Vector, gen: &GenerationRecord) -> GenerationStats {
    let deviations: Vec<Vector> = gen.samples.iter().map(|x| x - m).collect();
    let d_w = deviations
        .iter()
        .zip(&gen.weights)
        .fold(Vector::zeros(m.len()), |acc, (d, &w)| acc + d * w);
    GenerationStats { deviations, d_w }
}

/// One SynCMA iteration: parameter update from generation `t` using the
/// memory as of entering `t`, followed by folding generation `t` into memory.
pub fn step(
    state: &SynCmaState,
    rates: &Rates,
    q_eval_point: QEvalPoint,
    gen: &GenerationRecord,
) -> Result<SynCmaState> {
    step_with_rule(state, rates, q_eval_point, MemoryRule::Exact, gen)
}

pub fn step_with_rule(
    state: &SynCmaState,
    rates: &Rates,
    q_eval_point: QEvalPoint,
    memory_rule: MemoryRule,
    gen: &GenerationRecord,
) -> Result<SynCmaState> {
    let n = state.dim();
    gen.validate(n)?;
    let m = &state.params.mean;
    if gen.mean_at_sampling != *m {
        return Err(Error::StaleGeneration);
    }
    let c = &state.params.cov;
    let GenerationStats { deviations, d_w } = generation_stats(m, gen);

    let s_m = &state.s_m_hat - m;
    let s_c = &state.s_c_hat - m;
    let beta = (&d_w + &s_m * rates.lambda0) / rates.z_m;
    let next_mean = m + &beta;

    let mut spread = Matrix::zeros(n, n);
    for (d, &w) in deviations.iter().zip(&gen.weights) {
        if w != 0.0 {
            spread += outer(&(d - &beta)) * w;
        }
    }
    let q_point = match q_eval_point {
        QEvalPoint::CurrentMean => m,
        QEvalPoint::NextMean => &next_mean,
    };
    let mut next_cov = (c + outer(&beta)) * (rates.eta_c / rates.z_c)
        + outer(&(&s_c - &beta)) * (rates.lambda0 / rates.z_c)
        + (spread + state.q_poly(q_point)) / rates.z_c;
    symmetrize(&mut next_cov);
    if !is_spd(&next_cov) {
        return Err(Error::CovarianceDegenerate { iteration: state.t });
    }

    // memory evolution with generation-t statistics
    let (lambda, zeta, alpha, l0) = (rates.lambda, rates.zeta, rates.alpha, rates.lambda0);
    let d_hat = &d_w + m;
    let s_c_old = &state.s_c_hat;

    let mut within = Matrix::zeros(n, n);
    for (d, &w) in deviations.iter().zip(&gen.weights) {
        if w != 0.0 {
            within += outer(&(d - &d_w)) * w;
        }
    }
    let mut q1 =
        &state.q1 * lambda + within * lambda - sym_outer(&d_hat, s_c_old) * (l0 * zeta * alpha);
    symmetrize(&mut q1);
    let (q2, q3) = match memory_rule {
        MemoryRule::Exact => (
            &state.q2 * lambda
                + s_c_old * (l0 * zeta * (1.0 - zeta))
                + &d_hat * (l0 * alpha * (1.0 - alpha)),
            // the m mᵀ coefficients cancel exactly since λ (λ₀ + 1) = λ₀
            state.q3 * lambda,
        ),
        MemoryRule::Printed => (
            &state.q2 * lambda - (s_c_old * zeta + &d_hat * alpha) * (l0 * (zeta + alpha - 2.0)),
            state.q3 * lambda - l0 * (zeta - 1.0) * (alpha - 1.0),
        ),
    };
    let s_m_hat = &state.s_m_hat * lambda + &d_hat * (1.0 - lambda);
    let s_c_hat = s_c_old * zeta + &d_hat * alpha;

    Ok(SynCmaState {
        params: GaussianParams {
            mean: next_mean,
            cov: next_cov,
        },
        s_m_hat,
        s_c_hat,
        q1,
        q2,
        q3,
        t: state.t + 1,
    })
}

/// Update with partial history (mean memory dropped, covariance memory
/// restricted to its `s_c` term), solved in closed form.
pub fn reduced_update(
    state: &SynCmaState,
    rates: &Rates,
    gen: &GenerationRecord,
) -> Result<GaussianParams> {
    let n = state.dim();
    gen.validate(n)?;
    let m = &state.params.mean;
    let GenerationStats { deviations, d_w } = generation_stats(m, gen);
    let s_c = &state.s_c_hat - m;
    let (z_m, z_c) = (rates.z_m, rates.z_c);

    let mut d_weighted = Matrix::zeros(n, n);
    for (d, &w) in deviations.iter().zip(&gen.weights) {
        d_weighted += outer(d) * w;
    }
    let mut cov = &state.params.cov * (rates.eta_c / z_c)
        + d_weighted / z_c
        + outer(&s_c) * (rates.lambda0 / z_c)
        - sym_outer(&d_w, &s_c) * (rates.lambda0 / (z_c * z_m))
        - outer(&d_w) * ((2.0 - z_c / z_m) / (z_c * z_m));
    symmetrize(&mut cov);
    Ok(GaussianParams {
        mean: m + &d_w / z_m,
        cov,
    })
}

/// Ask/tell driver around [`SynCmaState`].
#[derive(Debug, Clone)]
pub struct SynCma {
    config: SynCmaConfig,
    rates: Rates,
    population: usize,
    state: SynCmaState,
}

impl SynCma {
    pub fn new(m0: Vector, config: SynCmaConfig) -> Result<Self> {
        let n = m0.len();
        if n == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        if let Some(index) = m0.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        if !(config.sigma0 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma0 must be positive, got {}",
                config.sigma0
            )));
        }
        let rates = Rates::resolve(&config, n)?;
        Ok(Self {
            population: config.population_for(n),
            state: SynCmaState::initial(m0, config.sigma0),
            rates,
            config,
        })
    }

    /// Resumes from an existing state, e.g. one with a non-isotropic covariance.
    pub fn from_state(state: SynCmaState, config: SynCmaConfig) -> Result<Self> {
        let n = state.dim();
        for len in [
            state.s_m_hat.len(),
            state.s_c_hat.len(),
            state.q2.len(),
            state.q1.nrows(),
        ] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        if !is_spd(&state.params.cov) {
            return Err(Error::CovarianceDegenerate { iteration: state.t });
        }
        Ok(Self {
            rates: Rates::resolve(&config, n)?,
            population: config.population_for(n),
            state,
            config,
        })
    }

    pub fn config(&self) -> &SynCmaConfig {
        &self.config
    }

    pub fn rates(&self) -> &Rates {
        &self.rates
    }

    pub fn state(&self) -> &SynCmaState {
        &self.state
    }

    pub fn population(&self) -> usize {
        self.population
    }

    pub fn ask<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<Vector>> {
        sample_population(&self.state.params, self.population, rng)
    }

    /// Applies one generation. On error the state is unchanged.
    pub fn tell(&mut self, gen: &GenerationRecord) -> Result<()> {
        self.state = step_with_rule(
            &self.state,
            &self.rates,
            self.config.q_eval_point,
            self.config.memory_rule,
            gen,
        )?;
        Ok(())
    }

    /// Ranks `values`, then applies the generation.
    pub fn tell_values(&mut self, samples: Vec<Vector>, values: Vec<f64>) -> Result<()> {
        let gen = GenerationRecord::from_values(
            samples,
            values,
            &self.config.weight_scheme,
            self.state.params.mean.clone(),
        )?;
        self.tell(&gen)
    }

    pub fn grad_m(&self, probe: &GaussianParams) -> (Vector, Matrix) {
        self.state.grad_m(&self.rates, probe)
    }

    pub fn reduced_update(&self, gen: &GenerationRecord) -> Result<GaussianParams> {
        reduced_update(&self.state, &self.rates, gen)
    }
}
