//! Brute-force reference for the SynCMA memory terms.
//!
//! [`HistoryBuffer`] keeps every past generation and evaluates the decayed sum
//! of per-generation KL gradients directly, in O(t) time and memory. The
//! optimizer keeps O(1) memory; agreement between the two is the check.
//!
//! The optimizer's memory starts at `ŝ = m₀, Q = 0`, which is not the zero
//! function: it equals an infinite virtual history of point-mass generations
//! at `m₀`, i.e. `Σ_{k≥1} λ^k` copies of the KL gradient of `δ(m₀)`, or
//! `λ₀ · (m₀ − m, (m₀ − m)(m₀ − m)ᵀ − C)`. The buffer stores `m₀` as its
//! anchor and adds that prior, decayed by `λ^t`.

use crate::gaussian::{max_abs, outer, symmetrize, GaussianParams, Matrix, Vector};
use crate::syncma::{GenerationRecord, QEvalPoint, Rates, SynCmaState};

#[derive(Debug, Clone, Default)]
pub struct HistoryBuffer {
    anchor: Option<Vector>,
    records: Vec<GenerationRecord>,
}

impl HistoryBuffer {
    /// Empty history with no prior.
    pub fn new() -> Self {
        Self::default()
    }

    /// Empty history whose prior matches an optimizer started at `m0`.
    pub fn anchored(m0: Vector) -> Self {
        Self {
            anchor: Some(m0),
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: GenerationRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[GenerationRecord] {
        &self.records
    }
}

/// `Σ_i ŵ_i (x_i − m)` and `Σ_i ŵ_i ((x_i − m)(x_i − m)ᵀ − C)`: the negated
/// natural gradient of `D_KL(q ‖ p_θ)` for one generation, at `probe`.
pub fn generation_term(record: &GenerationRecord, probe: &GaussianParams) -> (Vector, Matrix) {
    let n = probe.dim();
    let mut mean = Vector::zeros(n);
    let mut cov = Matrix::zeros(n, n);
    for (x, &w) in record.samples.iter().zip(&record.weights) {
        let d = x - &probe.mean;
        mean += &d * w;
        cov += (outer(&d) - &probe.cov) * w;
    }
    symmetrize(&mut cov);
    (mean, cov)
}

/// Decayed history sum `Σ_{τ=1}^{t} λ^τ term(generation t − τ)` at `probe`,
/// plus the anchor prior when present. The live generation (τ = 0) is not
/// included.
pub fn brute_force_grad_g(
    history: &HistoryBuffer,
    lambda: f64,
    probe: &GaussianParams,
) -> (Vector, Matrix) {
    let n = probe.dim();
    let t = history.len();
    let mut mean = Vector::zeros(n);
    let mut cov = Matrix::zeros(n, n);
    if lambda == 0.0 {
        return (mean, cov);
    }
    // oldest first, so λ^τ grows toward the newest record
    for (age, record) in history.records.iter().rev().enumerate() {
        let decay = lambda.powi(age as i32 + 1);
        let (gm, gc) = generation_term(record, probe);
        mean += gm * decay;
        cov += gc * decay;
    }
    if let Some(m0) = &history.anchor {
        let lambda0 = lambda / (1.0 - lambda);
        let weight = lambda.powi(t as i32) * lambda0;
        let d = m0 - &probe.mean;
        mean += &d * weight;
        cov += (outer(&d) - &probe.cov) * weight;
    }
    symmetrize(&mut cov);
    (mean, cov)
}

fn relative_gap(a: &Vector, b: &Vector, ma: &Matrix, mb: &Matrix) -> f64 {
    let scale_v = a.amax().max(b.amax());
    let scale_m = max_abs(ma).max(max_abs(mb));
    let gap_v = (a - b).amax();
    let gap_m = max_abs(&(ma - mb));
    let rel = |gap: f64, scale: f64| {
        if gap == 0.0 {
            0.0
        } else {
            gap / scale.max(f64::MIN_POSITIVE)
        }
    };
    rel(gap_v, scale_v).max(rel(gap_m, scale_m))
}

/// Largest relative deviation between the optimizer's memory gradient and
/// the brute-force history sum over `probes`.
pub fn check_memory(
    state: &SynCmaState,
    rates: &Rates,
    history: &HistoryBuffer,
    probes: &[GaussianParams],
) -> f64 {
    probes
        .iter()
        .map(|probe| {
            let (fm, fc) = state.grad_m(rates, probe);
            let (bm, bc) = brute_force_grad_g(history, rates.lambda, probe);
            relative_gap(&fm, &bm, &fc, &bc)
        })
        .fold(0.0, f64::max)
}

/// Residual norms of the stationarity conditions solved by one SynCMA step,
/// with the trust-region penalty in expectation form:
///
/// ```text
/// r_m = Σ ŵ_i (x_i − m') + η_m (m − m') + ∇_m M(θ')
/// r_c = Σ ŵ_i ((x_i − m')(x_i − m')ᵀ − C') + η_c (C + (m − m')(m − m')ᵀ − C') + ∇_C M(θ')
/// ```
///
/// `r_m` is relative to `max(‖d_w‖, ‖λ₀ s_m‖)` and `r_c` to `‖C'‖` (max norms).
pub fn check_residuals(
    prev: &SynCmaState,
    rates: &Rates,
    q_eval_point: QEvalPoint,
    gen: &GenerationRecord,
    next: &GaussianParams,
) -> (f64, f64) {
    let n = prev.dim();
    let m = &prev.params.mean;
    let c = &prev.params.cov;
    let (m1, c1) = (&next.mean, &next.cov);

    let mut pull = Vector::zeros(n);
    let mut pull_cov = Matrix::zeros(n, n);
    let mut d_w = Vector::zeros(n);
    for (x, &w) in gen.samples.iter().zip(&gen.weights) {
        let d = x - m1;
        pull += &d * w;
        pull_cov += (outer(&d) - c1) * w;
        d_w += (x - m) * w;
    }
    let step = m - m1;
    let memory_mean = (&prev.s_m_hat - m1) * rates.lambda0;
    let r_m = pull + &step * rates.eta_m + &memory_mean;

    let q_point = match q_eval_point {
        QEvalPoint::CurrentMean => m,
        QEvalPoint::NextMean => m1,
    };
    let memory_cov = prev.memory_cov_at(rates, m1, c1, q_point);
    let r_c = pull_cov + (c + outer(&step) - c1) * rates.eta_c + memory_cov;

    let mean_scale = d_w.amax().max((&prev.s_m_hat - m).amax() * rates.lambda0);
    let rel_m = if r_m.amax() == 0.0 {
        0.0
    } else {
        r_m.amax() / mean_scale.max(f64::MIN_POSITIVE)
    };
    let rel_c = max_abs(&r_c) / max_abs(c1).max(f64::MIN_POSITIVE);
    (rel_m, rel_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{nat_grad_cov, nat_grad_mean};
    use crate::syncma::{step, EtaCMode, SynCma, SynCmaConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn random_generation(
        state: &SynCmaState,
        count: usize,
        rng: &mut ChaCha8Rng,
    ) -> GenerationRecord {
        let n = state.dim();
        let samples: Vec<Vector> = (0..count)
            .map(|_| &state.params.mean + Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let values: Vec<f64> = (0..count).map(|_| rng.random()).collect();
        GenerationRecord::from_values(
            samples,
            values,
            &Default::default(),
            state.params.mean.clone(),
        )
        .unwrap()
    }

    fn probe_near(state: &SynCmaState, rng: &mut ChaCha8Rng) -> GaussianParams {
        let n = state.dim();
        let b = Matrix::from_fn(n, n, |_, _| rng.random_range(-0.3..0.3));
        let cov = &state.params.cov + &b * b.transpose();
        let mean = &state.params.mean + Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        GaussianParams::new(mean, cov).unwrap()
    }

    #[test]
    fn empty_history_without_anchor_is_zero() {
        let probe = GaussianParams::isotropic(v(&[1.0, 2.0]), 1.0);
        let (m, c) = brute_force_grad_g(&HistoryBuffer::new(), 0.5, &probe);
        assert_eq!(m, Vector::zeros(2));
        assert_eq!(c, Matrix::zeros(2, 2));
    }

    #[test]
    fn zero_decay_is_zero() {
        let mut h = HistoryBuffer::anchored(v(&[0.0, 0.0]));
        h.push(GenerationRecord::with_weights(
            vec![v(&[1.0, 1.0])],
            vec![1.0],
            v(&[0.0, 0.0]),
        ));
        let probe = GaussianParams::isotropic(v(&[1.0, 2.0]), 1.0);
        let (m, c) = brute_force_grad_g(&h, 0.0, &probe);
        assert_eq!(m, Vector::zeros(2));
        assert_eq!(c, Matrix::zeros(2, 2));
    }

    #[test]
    fn memory_matches_at_start_and_without_history() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for lambda0 in [0.0, 2.0] {
            let opt = SynCma::new(v(&[0.5, -1.0]), SynCmaConfig::with_lambda0(lambda0)).unwrap();
            let h = HistoryBuffer::anchored(opt.state().params.mean.clone());
            let probes: Vec<_> = (0..5).map(|_| probe_near(opt.state(), &mut rng)).collect();
            assert!(check_memory(opt.state(), opt.rates(), &h, &probes) <= 1e-14);
        }
    }

    #[test]
    fn memory_tracks_history() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut opt = SynCma::new(v(&[1.0, -2.0]), SynCmaConfig::with_lambda0(2.0)).unwrap();
        let mut h = HistoryBuffer::anchored(opt.state().params.mean.clone());
        for _ in 0..3 {
            let gen = random_generation(opt.state(), 4, &mut rng);
            opt.tell(&gen).unwrap();
            h.push(gen);
        }
        let probes: Vec<_> = (0..10).map(|_| probe_near(opt.state(), &mut rng)).collect();
        let dev = check_memory(opt.state(), opt.rates(), &h, &probes);
        assert!(dev <= 1e-9, "{dev}");
    }

    #[test]
    fn live_term_equals_nat_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let opt = SynCma::new(v(&[0.3, 0.1, -0.7]), SynCmaConfig::default()).unwrap();
        let gen = random_generation(opt.state(), 6, &mut rng);
        let at = &opt.state().params;
        let (gm, gc) = generation_term(&gen, at);
        assert_eq!(gm, nat_grad_mean(&gen.samples, &gen.weights, at).unwrap());
        assert_eq!(gc, nat_grad_cov(&gen.samples, &gen.weights, at).unwrap());
    }

    #[test]
    fn worked_example_residuals() {
        let config = SynCmaConfig {
            lambda0: 0.0,
            z_m: 10.0,
            eta_c_mode: EtaCMode::Absolute(9.0),
            sigma0: 1.0,
            population: Some(2),
            ..SynCmaConfig::default()
        };
        let opt = SynCma::new(v(&[0.0]), config).unwrap();
        let gen =
            GenerationRecord::with_weights(vec![v(&[1.0]), v(&[-2.0])], vec![1.0, 0.0], v(&[0.0]));
        let next = step(opt.state(), opt.rates(), QEvalPoint::CurrentMean, &gen).unwrap();
        let (rm, rc) = check_residuals(
            opt.state(),
            opt.rates(),
            QEvalPoint::CurrentMean,
            &gen,
            &next.params,
        );
        assert!(rm < 1e-12 && rc < 1e-12, "{rm} {rc}");
    }

    #[test]
    fn residuals_vanish_for_both_q_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for mode in [QEvalPoint::CurrentMean, QEvalPoint::NextMean] {
            let config = SynCmaConfig {
                q_eval_point: mode,
                ..SynCmaConfig::with_lambda0(2.0)
            };
            let mut opt = SynCma::new(v(&[1.0, 2.0, 3.0]), config).unwrap();
            for _ in 0..10 {
                let gen = random_generation(opt.state(), 6, &mut rng);
                let prev = opt.state().clone();
                opt.tell(&gen).unwrap();
                let (rm, rc) = check_residuals(&prev, opt.rates(), mode, &gen, &opt.state().params);
                assert!(rm < 1e-12 && rc < 1e-12, "{mode:?}: {rm} {rc}");
            }
        }
    }

    #[test]
    fn a_wrong_update_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let opt = SynCma::new(v(&[1.0, 2.0]), SynCmaConfig::default()).unwrap();
        let gen = random_generation(opt.state(), 4, &mut rng);
        let mut next = step(opt.state(), opt.rates(), QEvalPoint::NextMean, &gen)
            .unwrap()
            .params;
        next.cov *= 1.01;
        let (_, rc) = check_residuals(opt.state(), opt.rates(), QEvalPoint::NextMean, &gen, &next);
        assert!(rc > 1e-4);
    }
}
