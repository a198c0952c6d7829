//! Seeded self-checks behind the `verify` and `reduce-check` commands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cmaes::rank_mu_update;
use crate::error::Result;
use crate::gaussian::{cholesky, max_abs, outer, sym_outer, GaussianParams, Matrix, Vector};
use crate::oracle::{check_memory, check_residuals, HistoryBuffer};
use crate::syncma::{reduced_update, GenerationRecord, Rates, SynCma, SynCmaConfig, SynCmaState};

/// Largest deviations seen along one oracle-checked trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OracleReport {
    pub steps: usize,
    /// Relative gap between the memory gradient and the history sum.
    pub memory: f64,
    pub residual_mean: f64,
    pub residual_cov: f64,
}

impl OracleReport {
    pub fn within(&self, memory_tol: f64, residual_tol: f64) -> bool {
        self.memory <= memory_tol
            && self.residual_mean <= residual_tol
            && self.residual_cov <= residual_tol
    }
}

fn normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Random SPD perturbation of `params`, kept on the scale of its covariance.
pub fn random_probe<R: Rng + ?Sized>(params: &GaussianParams, rng: &mut R) -> GaussianParams {
    let n = params.dim();
    let scale = (params.cov.trace() / n as f64).sqrt();
    let a = Matrix::identity(n, n)
        + Matrix::from_fn(n, n, |_, _| 0.2 * rng.sample::<f64, _>(StandardNormal));
    let cov = &a * &params.cov * a.transpose() + Matrix::identity(n, n) * (0.01 * scale * scale);
    let mean = &params.mean + normal_vector(n, rng) * scale;
    GaussianParams { mean, cov }
}

/// Draws a generation from the state's own distribution with random values,
/// so the ranking carries no structure.
pub fn random_generation<R: Rng + ?Sized>(opt: &SynCma, rng: &mut R) -> Result<GenerationRecord> {
    let samples = opt.ask(rng)?;
    let values = (0..samples.len()).map(|_| rng.random::<f64>()).collect();
    GenerationRecord::from_values(
        samples,
        values,
        &opt.config().weight_scheme,
        opt.state().params.mean.clone(),
    )
}

/// Runs `steps` random generations at the default configuration with the
/// given `lambda0`, checking memory and stationarity after every step.
pub fn oracle_run(
    dim: usize,
    steps: usize,
    lambda0: f64,
    seed: u64,
    probes: usize,
) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m0 = Vector::from_fn(dim, |_, _| rng.random_range(-3.0..3.0));
    let config = SynCmaConfig {
        sigma0: 1.0,
        ..SynCmaConfig::with_lambda0(lambda0)
    };
    let mut opt = SynCma::new(m0.clone(), config)?;
    let mut history = HistoryBuffer::anchored(m0);
    let mut report = OracleReport {
        steps,
        ..OracleReport::default()
    };
    for _ in 0..steps {
        let gen = random_generation(&opt, &mut rng)?;
        let prev = opt.state().clone();
        opt.tell(&gen)?;
        let (rm, rc) = check_residuals(
            &prev,
            opt.rates(),
            opt.config().q_eval_point,
            &gen,
            &opt.state().params,
        );
        report.residual_mean = report.residual_mean.max(rm);
        report.residual_cov = report.residual_cov.max(rc);
        history.push(gen);
        let probe_set: Vec<_> = (0..probes)
            .map(|_| random_probe(&opt.state().params, &mut rng))
            .collect();
        report.memory =
            report
                .memory
                .max(check_memory(opt.state(), opt.rates(), &history, &probe_set));
    }
    Ok(report)
}

/// Elementwise gap between the reduced covariance update with its
/// second-order `d_w` terms removed and the rank-μ update at `c_μ = 1/z_c`.
/// Meaningful for `lambda0 = 0`.
pub fn bridge_gap(state: &SynCmaState, rates: &Rates, gen: &GenerationRecord) -> Result<f64> {
    let reduced = reduced_update(state, rates, gen)?;
    let m = &state.params.mean;
    let steps: Vec<Vector> = gen.samples.iter().map(|x| x - m).collect();
    let d_w = steps
        .iter()
        .zip(&gen.weights)
        .fold(Vector::zeros(m.len()), |acc, (d, &w)| acc + d * w);
    let s_c = &state.s_c_hat - m;
    let (z_m, z_c) = (rates.z_m, rates.z_c);
    let first_order = reduced.cov
        + sym_outer(&d_w, &s_c) * (rates.lambda0 / (z_c * z_m))
        + outer(&d_w) * ((2.0 - z_c / z_m) / (z_c * z_m));
    let rank_mu = rank_mu_update(&state.params.cov, &steps, &gen.weights, 1.0 / z_c);
    Ok(max_abs(&(first_order - rank_mu)))
}

/// Worst [`bridge_gap`] over `generations` random states and generations
/// at `lambda0 = 0`.
pub fn bridge_run(dim: usize, generations: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..generations {
        let m0 = Vector::from_fn(dim, |_, _| rng.random_range(-3.0..3.0));
        let mut opt = SynCma::new(m0, SynCmaConfig::with_lambda0(0.0))?;
        let b = Matrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let cov = &b * b.transpose() / dim as f64 + Matrix::identity(dim, dim) * 0.1;
        cholesky(&cov)?;
        let mut state = opt.state().clone();
        state.params.cov = cov;
        opt = SynCma::from_state(state, opt.config().clone())?;
        let gen = random_generation(&opt, &mut rng)?;
        worst = worst.max(bridge_gap(opt.state(), opt.rates(), &gen)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_oracle_run_is_clean() {
        let r = oracle_run(3, 5, 2.0, 11, 4).unwrap();
        assert_eq!(r.steps, 5);
        assert!(r.within(1e-9, 1e-9), "{r:?}");
    }

    #[test]
    fn bridge_holds_on_a_few_generations() {
        assert!(bridge_run(4, 5, 3).unwrap() <= 1e-12);
    }

    #[test]
    fn probes_are_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = GaussianParams::isotropic(Vector::zeros(5), 0.01);
        for _ in 0..50 {
            assert!(cholesky(&random_probe(&p, &mut rng).cov).is_ok());
        }
    }
}
