//! Textbook CMA-ES: weighted recombination, cumulative step-size adaptation,
//! rank-one and rank-μ covariance updates. Used as a comparison baseline.

use nalgebra::SymmetricEigen;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fitness::{self, mu_eff, WeightScheme};
use crate::gaussian::{is_spd, outer, sample_with_factor, symmetrize, Matrix, Vector};

/// Strategy constants for a given dimension and population.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaConstants {
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub chi_n: f64,
}

impl CmaConstants {
    pub fn new(dim: usize, population: usize, scheme: &WeightScheme) -> Self {
        let n = dim as f64;
        let weights = fitness::compute_weights(scheme, population);
        let mu_eff = mu_eff(&weights);
        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1)
            .min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff))
            .max(0.0);
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        Self {
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        }
    }
}

/// Rank-μ-only covariance update `(1 − c_μ) Σ + c_μ Σ_i w_i y_i y_iᵀ`.
pub fn rank_mu_update(cov: &Matrix, steps: &[Vector], weights: &[f64], c_mu: f64) -> Matrix {
    let mut next = cov * (1.0 - c_mu);
    for (y, &w) in steps.iter().zip(weights) {
        if w != 0.0 {
            next += outer(y) * (c_mu * w);
        }
    }
    symmetrize(&mut next);
    next
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmaEsState {
    pub mean: Vector,
    pub sigma: f64,
    pub cov: Matrix,
    pub p_sigma: Vector,
    pub p_c: Vector,
    pub t: usize,
}

#[derive(Debug, Clone)]
pub struct CmaEs {
    state: CmaEsState,
    population: usize,
    scheme: WeightScheme,
    constants: CmaConstants,
    // eigenbasis of `cov`: B, D (sqrt of eigenvalues)
    basis: Matrix,
    scales: Vector,
}

impl CmaEs {
    pub const DEFAULT_SIGMA0: f64 = 0.1;

    pub fn new(mean: Vector, sigma0: f64, population: usize, scheme: WeightScheme) -> Result<Self> {
        let n = mean.len();
        if n == 0 || population < 2 {
            return Err(Error::InvalidConfig(format!(
                "need dim >= 1 and population >= 2, got {n} and {population}"
            )));
        }
        if !(sigma0 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma0 must be positive, got {sigma0}"
            )));
        }
        Ok(Self {
            state: CmaEsState {
                sigma: sigma0,
                cov: Matrix::identity(n, n),
                p_sigma: Vector::zeros(n),
                p_c: Vector::zeros(n),
                t: 0,
                mean,
            },
            population,
            constants: CmaConstants::new(n, population, &scheme),
            scheme,
            basis: Matrix::identity(n, n),
            scales: Vector::repeat(n, 1.0),
        })
    }

    pub fn state(&self) -> &CmaEsState {
        &self.state
    }

    pub fn constants(&self) -> &CmaConstants {
        &self.constants
    }

    pub fn population(&self) -> usize {
        self.population
    }

    pub fn ask<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vector> {
        let factor = &self.basis * Matrix::from_diagonal(&self.scales) * self.state.sigma;
        sample_with_factor(&self.state.mean, &factor, self.population, rng)
    }

    pub fn tell(&mut self, samples: &[Vector], values: &[f64]) -> Result<()> {
        let n = self.state.mean.len();
        if samples.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: samples.len(),
                found: values.len(),
            });
        }
        if let Some(x) = samples.iter().find(|x| x.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        let weights = fitness::assign(values, &self.scheme)?;
        let k = &self.constants;
        let s = &self.state;

        let steps: Vec<Vector> = samples.iter().map(|x| (x - &s.mean) / s.sigma).collect();
        let y_w = steps
            .iter()
            .zip(&weights)
            .fold(Vector::zeros(n), |acc, (y, &w)| acc + y * w);
        let mean = &s.mean + &y_w * s.sigma;

        // C^{-1/2} y_w = B D^{-1} Bᵀ y_w
        let whitened = &self.basis * (self.basis.transpose() * &y_w).component_div(&self.scales);
        let p_sigma = &s.p_sigma * (1.0 - k.c_sigma)
            + whitened * (k.c_sigma * (2.0 - k.c_sigma) * k.mu_eff).sqrt();
        let norm_ps = p_sigma.norm();
        let decay = 1.0 - (1.0 - k.c_sigma).powi(2 * (s.t as i32 + 1));
        let h_sigma = if norm_ps / decay.sqrt() < (1.4 + 2.0 / (n as f64 + 1.0)) * k.chi_n {
            1.0
        } else {
            0.0
        };
        let p_c =
            &s.p_c * (1.0 - k.c_c) + &y_w * (h_sigma * (k.c_c * (2.0 - k.c_c) * k.mu_eff).sqrt());

        let mut cov = rank_mu_update(&s.cov, &steps, &weights, k.c_mu);
        let rank_one_loss = (1.0 - h_sigma) * k.c_1 * k.c_c * (2.0 - k.c_c);
        cov += &s.cov * (rank_one_loss - k.c_1) + outer(&p_c) * k.c_1;
        symmetrize(&mut cov);
        if !is_spd(&cov) {
            return Err(Error::CovarianceDegenerate { iteration: s.t });
        }
        let sigma = s.sigma * ((k.c_sigma / k.d_sigma) * (norm_ps / k.chi_n - 1.0)).exp();

        let eig = SymmetricEigen::new(cov.clone());
        if eig.eigenvalues.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::CovarianceDegenerate { iteration: s.t });
        }
        self.basis = eig.eigenvectors;
        self.scales = eig.eigenvalues.map(f64::sqrt);
        self.state = CmaEsState {
            mean,
            sigma,
            cov,
            p_sigma,
            p_c,
            t: s.t + 1,
        };
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::Function;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_defaults() {
        let es = CmaEs::new(
            Vector::zeros(2),
            CmaEs::DEFAULT_SIGMA0,
            4,
            WeightScheme::default(),
        )
        .unwrap();
        assert_eq!(es.state().cov, Matrix::identity(2, 2));
        assert_eq!(es.state().p_sigma, Vector::zeros(2));
        assert_eq!(es.state().p_c, Vector::zeros(2));
        assert_eq!(es.state().sigma, 0.1);
    }

    #[test]
    fn learning_rates_bounded() {
        for n in 2..=128 {
            let k = CmaConstants::new(n, 2 * n, &WeightScheme::default());
            assert!(k.c_1 + k.c_mu <= 1.0, "n={n}");
            assert!(k.c_mu > 0.0 && k.c_1 > 0.0);
        }
    }

    #[test]
    fn zero_deviation_keeps_mean() {
        let mut es = CmaEs::new(
            Vector::from_vec(vec![1.0, -1.0]),
            0.5,
            4,
            WeightScheme::default(),
        )
        .unwrap();
        let xs = vec![es.state().mean.clone(); 4];
        es.tell(&xs, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(es.state().mean, Vector::from_vec(vec![1.0, -1.0]));
    }

    fn run_sphere(seed: u64, iters: usize) -> (f64, Vec<Vector>) {
        let n = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut es = CmaEs::new(Vector::repeat(n, 1.0), 0.5, 16, WeightScheme::default()).unwrap();
        let mut best = f64::INFINITY;
        let mut means = Vec::new();
        for _ in 0..iters {
            let xs = es.ask(&mut rng);
            let vals: Vec<f64> = xs
                .iter()
                .map(|x| Function::Sphere.base(x.as_slice()))
                .collect();
            best = vals.iter().copied().fold(best, f64::min);
            es.tell(&xs, &vals).unwrap();
            means.push(es.state().mean.clone());
        }
        (best, means)
    }

    #[test]
    fn converges_on_sphere() {
        let (best, _) = run_sphere(5, 300);
        assert!(best < 1e-6, "{best}");
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(run_sphere(9, 40).1, run_sphere(9, 40).1);
    }
}
