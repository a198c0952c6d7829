//! Dense Gaussian search distribution: Cholesky factorization, sampling and
//! the closed-form natural-gradient estimators for the `(m, C)` parameterization.
//!
//! Standard-normal draws use `rand_distr::StandardNormal` (ziggurat). For a
//! fixed seed and a fixed RNG type the produced samples are bitwise stable.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Mean and covariance of a multivariate normal search distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    pub mean: Vector,
    pub cov: Matrix,
}

impl GaussianParams {
    pub fn new(mean: Vector, cov: Matrix) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: cov.nrows(),
            });
        }
        Ok(Self { mean, cov })
    }

    /// `N(m, scale * I)`.
    pub fn isotropic(mean: Vector, scale: f64) -> Self {
        let n = mean.len();
        Self {
            mean,
            cov: Matrix::identity(n, n) * scale,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Replaces `c` by `(c + cᵀ) / 2` in place.
pub fn symmetrize(c: &mut Matrix) {
    let n = c.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
}

/// `a bᵀ + b aᵀ`.
pub fn sym_outer(a: &Vector, b: &Vector) -> Matrix {
    let ab = a * b.transpose();
    let ba = ab.transpose();
    ab + ba
}

pub fn outer(a: &Vector) -> Matrix {
    a * a.transpose()
}

pub(crate) fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn factor_with_floor(c: &Matrix, floor: f64) -> Result<Matrix> {
    let n = c.nrows();
    if c.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: c.ncols(),
        });
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = c[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > floor) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite {
                row: j,
                pivot: diag,
            });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = c[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Lower-triangular `A` with `A Aᵀ = C`. Reads the lower triangle of `c` only.
pub fn cholesky(c: &Matrix) -> Result<Matrix> {
    factor_with_floor(c, 0.0)
}

/// True iff Cholesky succeeds with every pivot above `1e-14 · trace(C) / n`.
pub fn is_spd(c: &Matrix) -> bool {
    let n = c.nrows();
    if n == 0 || c.ncols() != n {
        return false;
    }
    let trace = c.trace();
    if !(trace > 0.0) || !trace.is_finite() {
        return false;
    }
    factor_with_floor(c, 1e-14 * trace / n as f64).is_ok()
}

/// Draws `count` points `m + A z` with `A = cholesky(C)` and `z ~ N(0, I)`.
pub fn sample_population<R: Rng + ?Sized>(
    params: &GaussianParams,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vector>> {
    let factor = cholesky(&params.cov)?;
    Ok(sample_with_factor(&params.mean, &factor, count, rng))
}

pub(crate) fn sample_with_factor<R: Rng + ?Sized>(
    mean: &Vector,
    factor: &Matrix,
    count: usize,
    rng: &mut R,
) -> Vec<Vector> {
    let n = mean.len();
    (0..count)
        .map(|_| {
            let z = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            mean + factor * z
        })
        .collect()
}

fn check_generation(samples: &[Vector], weights: &[f64], n: usize) -> Result<()> {
    if samples.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            found: weights.len(),
        });
    }
    if let Some(bad) = samples.iter().find(|x| x.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    Ok(())
}

/// Weighted natural gradient of the log-likelihood w.r.t. the mean:
/// `Σ ŵ_i (x_i − m)`.
pub fn nat_grad_mean(
    samples: &[Vector],
    weights: &[f64],
    params: &GaussianParams,
) -> Result<Vector> {
    let n = params.dim();
    check_generation(samples, weights, n)?;
    let mut g = Vector::zeros(n);
    for (x, &w) in samples.iter().zip(weights) {
        g += (x - &params.mean) * w;
    }
    Ok(g)
}

/// Weighted natural gradient w.r.t. the covariance:
/// `Σ ŵ_i ((x_i − m)(x_i − m)ᵀ − C)`.
pub fn nat_grad_cov(
    samples: &[Vector],
    weights: &[f64],
    params: &GaussianParams,
) -> Result<Matrix> {
    let n = params.dim();
    check_generation(samples, weights, n)?;
    let mut g = Matrix::zeros(n, n);
    for (x, &w) in samples.iter().zip(weights) {
        let d = x - &params.mean;
        g += (outer(&d) - &params.cov) * w;
    }
    symmetrize(&mut g);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, proptest};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let b = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let mut c = &b * b.transpose() + Matrix::identity(n, n) * 1e-3;
        symmetrize(&mut c);
        c
    }

    #[test]
    fn cholesky_identity_and_diagonal() {
        let id = Matrix::identity(3, 3);
        assert_eq!(cholesky(&id).unwrap(), id);

        let c = Matrix::from_diagonal(&Vector::from_vec(vec![4.0, 9.0]));
        let a = cholesky(&c).unwrap();
        assert_eq!(a, Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 3.0])));
    }

    #[test]
    fn cholesky_two_by_two_reconstructs() {
        let c = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let a = cholesky(&c).unwrap();
        assert_eq!(a[(0, 1)], 0.0);
        assert!(max_abs(&(&a * a.transpose() - &c)) < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let c = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(
            cholesky(&c),
            Err(Error::NotPositiveDefinite { row: 1, .. })
        ));
    }

    #[test]
    fn spd_checks() {
        assert!(is_spd(&Matrix::identity(4, 4)));
        assert!(!is_spd(&Matrix::from_diagonal(&Vector::from_vec(vec![
            1.0, -1.0
        ]))));
        let v = Vector::from_vec(vec![1.0, 2.0, -0.5]);
        assert!(!is_spd(&outer(&v)));
        assert!(!is_spd(&Matrix::zeros(2, 2)));
    }

    #[test]
    fn sample_mean_converges() {
        let params = GaussianParams::isotropic(Vector::zeros(3), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs = sample_population(&params, 100_000, &mut rng).unwrap();
        let mean = xs.iter().fold(Vector::zeros(3), |acc, x| acc + x) / xs.len() as f64;
        for v in mean.iter() {
            assert!(v.abs() < 0.02, "{v}");
        }
    }

    #[test]
    fn sampling_is_deterministic_and_finite() {
        let params = GaussianParams::isotropic(Vector::from_vec(vec![5.0]), 1.0);
        let a = sample_population(&params, 2, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = sample_population(&params, 2, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|x| x[0].is_finite()));
    }

    #[test]
    fn nat_grad_examples() {
        let p = GaussianParams::isotropic(Vector::from_vec(vec![0.0]), 1.0);
        let xs = vec![Vector::from_vec(vec![1.0]), Vector::from_vec(vec![-2.0])];

        let g = nat_grad_mean(&xs, &[0.8, 0.2], &p).unwrap();
        assert!((g[0] - 0.4).abs() < 1e-15);
        let g = nat_grad_mean(&xs, &[1.0, 0.0], &p).unwrap();
        assert_eq!(g[0], 1.0);

        let gc = nat_grad_cov(&xs, &[0.5, 0.5], &p).unwrap();
        assert!((gc[(0, 0)] - 1.5).abs() < 1e-15);
        let gc = nat_grad_cov(&[Vector::from_vec(vec![2.0])], &[1.0], &p).unwrap();
        assert_eq!(gc[(0, 0)], 3.0);

        let p2 = GaussianParams::isotropic(Vector::from_vec(vec![1.0, 2.0]), 1.0);
        let at_mean = vec![p2.mean.clone()];
        assert_eq!(
            nat_grad_mean(&at_mean, &[1.0], &p2).unwrap(),
            Vector::zeros(2)
        );
        assert_eq!(
            nat_grad_cov(&at_mean, &[1.0], &p2).unwrap(),
            -Matrix::identity(2, 2)
        );
    }

    #[test]
    fn nat_grad_dimension_mismatch() {
        let p = GaussianParams::isotropic(Vector::zeros(2), 1.0);
        let xs = vec![Vector::zeros(3)];
        assert!(matches!(
            nat_grad_mean(&xs, &[1.0], &p),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            nat_grad_cov(&[Vector::zeros(2)], &[0.5, 0.5], &p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn cholesky_round_trip(seed in any::<u64>(), n in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_spd(n, &mut rng);
            let a = cholesky(&c).unwrap();
            prop_assert!(max_abs(&(&a * a.transpose() - &c)) <= 1e-10 * max_abs(&c));
        }

        #[test]
        fn nat_grads_are_affine_equivariant(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cov = random_spd(n, &mut rng);
            let mean = Vector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
            let params = GaussianParams::new(mean, cov).unwrap();
            let xs = sample_population(&params, 2 * n + 2, &mut rng).unwrap();
            let mut w: Vec<f64> = (0..xs.len()).map(|_| rng.random_range(0.0..1.0)).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);

            let r = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
                + Matrix::identity(n, n) * 2.0;
            let b = Vector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
            let txs: Vec<Vector> = xs.iter().map(|x| &r * x + &b).collect();
            let tparams = GaussianParams::new(
                &r * &params.mean + &b,
                &r * &params.cov * r.transpose(),
            ).unwrap();

            let g = nat_grad_mean(&xs, &w, &params).unwrap();
            let tg = nat_grad_mean(&txs, &w, &tparams).unwrap();
            let expect = &r * g;
            let scale = expect.amax().max(1e-12);
            prop_assert!((tg - &expect).amax() <= 1e-10 * scale.max(1.0));

            let gc = nat_grad_cov(&xs, &w, &params).unwrap();
            let tgc = nat_grad_cov(&txs, &w, &tparams).unwrap();
            let expect = &r * gc * r.transpose();
            let scale = max_abs(&expect).max(max_abs(&tparams.cov));
            prop_assert!(max_abs(&(tgc - &expect)) <= 1e-10 * scale);
        }
    }
}
