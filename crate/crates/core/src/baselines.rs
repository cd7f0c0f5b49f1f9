//! Reference aggregators: simple averaging, precision-weighted averaging
//! (consensus Monte Carlo), and the parametric Gaussian product.
//!
//! Draws are paired across subsets by independent uniform indices with
//! replacement.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::gaussian::{product_of_gaussians, regularized_precision, sample_moments, Gaussian};
use crate::rng::rng_from_seed;
use crate::types::{DrawMatrix, SampleSet};

/// Ridge scale applied to singular subset covariances.
pub const BASELINE_RIDGE: f64 = 1e-8;

/// Each output draw is the arithmetic mean of one random draw per subset.
pub fn average_aggregate(samples: &SampleSet, n_draws: usize, seed: u64) -> Result<DrawMatrix> {
    let p = samples.dim();
    let m = samples.m() as f64;
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(n_draws * p);
    for _ in 0..n_draws {
        let mut acc = vec![0.0; p];
        for s in samples.subsets() {
            let row = s.row(rng.random_range(0..s.n_draws()));
            acc.iter_mut().zip(row).for_each(|(a, v)| *a += v);
        }
        out.extend(acc.into_iter().map(|a| a / m));
    }
    DrawMatrix::new(out, p, 0)
}

/// Each output draw is `(sum_i W_i)^-1 sum_i W_i theta_i` with `W_i` the
/// inverse sample covariance of subset `i`.
pub fn weighted_aggregate(samples: &SampleSet, n_draws: usize, seed: u64) -> Result<DrawMatrix> {
    let p = samples.dim();
    let weights = samples
        .subsets()
        .iter()
        .map(|s| {
            let m = sample_moments(s.rows(), p)?;
            regularized_precision(&m.cov, BASELINE_RIDGE)
        })
        .collect::<Result<Vec<DMatrix<f64>>>>()?;
    let total = weights.iter().fold(DMatrix::zeros(p, p), |acc, w| acc + w);
    let total = Cholesky::new((&total + total.transpose()) * 0.5).ok_or(Error::SingularCovariance)?;

    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(n_draws * p);
    for _ in 0..n_draws {
        let mut acc = DVector::zeros(p);
        for (s, w) in samples.subsets().iter().zip(&weights) {
            let row = s.row(rng.random_range(0..s.n_draws()));
            acc += w * DVector::from_column_slice(row);
        }
        out.extend_from_slice(total.solve(&acc).as_slice());
    }
    DrawMatrix::new(out, p, 0)
}

/// Product of moment-matched Gaussian fits to each subset.
pub fn parametric_fit(samples: &SampleSet) -> Result<Gaussian> {
    let p = samples.dim();
    let parts = samples
        .subsets()
        .iter()
        .map(|s| sample_moments(s.rows(), p))
        .collect::<Result<Vec<_>>>()?;
    product_of_gaussians(&parts, BASELINE_RIDGE)
}

/// `n_draws` samples from [`parametric_fit`].
pub fn parametric_aggregate(samples: &SampleSet, n_draws: usize, seed: u64) -> Result<DrawMatrix> {
    let g = parametric_fit(samples)?;
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(n_draws * g.dim());
    for _ in 0..n_draws {
        out.extend(g.sample(&mut rng));
    }
    DrawMatrix::new(out, g.dim(), 0)
}
