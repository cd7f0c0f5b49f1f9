use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numeric::softplus;
use crate::rng::rng_from_seed;

/// Synthetic logistic regression with correlated Gaussian features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticSpec {
    pub n_obs: usize,
    /// Parameter dimension including the intercept.
    pub p: usize,
    /// Feature correlation decays as `rho^|k - l|`.
    pub rho: f64,
    pub intercept: f64,
    /// Standard deviation of the slopes and of the prior on every coordinate.
    pub prior_sd: f64,
    pub m: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for LogisticSpec {
    fn default() -> Self {
        Self {
            n_obs: 5_000,
            p: 5,
            rho: 0.9,
            intercept: -3.0,
            prior_sd: 5.0,
            m: 8,
            iterations: 20_000,
            burn_in: 10_000,
            thin: 1,
            seed: 0,
        }
    }
}

/// Labels plus intercept-augmented features stored row-major (`n x p`).
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticData {
    x: Vec<f64>,
    y: Vec<bool>,
    p: usize,
    pub theta_star: Vec<f64>,
}

impl LogisticData {
    /// `features` holds `p - 1` values per observation, without the intercept.
    pub fn new(features: &[Vec<f64>], labels: Vec<bool>, theta_star: Vec<f64>) -> Result<Self> {
        let p = theta_star.len();
        if features.len() != labels.len() {
            return Err(Error::InvalidInput("feature and label counts differ".into()));
        }
        if labels.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut x = Vec::with_capacity(labels.len() * p);
        for f in features {
            if f.len() + 1 != p {
                return Err(Error::DimensionMismatch { expected: p - 1, found: f.len() });
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("feature".into()));
            }
            x.push(1.0);
            x.extend_from_slice(f);
        }
        Ok(Self { x, y: labels, p, theta_star })
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn labels(&self) -> &[bool] {
        &self.y
    }

    /// Augmented row `[1, x_1, ..., x_{p-1}]`.
    pub fn row(&self, j: usize) -> &[f64] {
        &self.x[j * self.p..(j + 1) * self.p]
    }

    /// Features of observation `j` without the intercept.
    pub fn features(&self, j: usize) -> &[f64] {
        &self.row(j)[1..]
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut x = Vec::with_capacity(idx.len() * self.p);
        for &j in idx {
            x.extend_from_slice(self.row(j));
        }
        Self { x, y: idx.iter().map(|&j| self.y[j]).collect(), p: self.p, theta_star: self.theta_star.clone() }
    }

    pub fn label_rate(&self) -> f64 {
        self.y.iter().filter(|&&v| v).count() as f64 / self.y.len() as f64
    }
}

/// `rho^|k - l|` covariance of dimension `d`.
pub fn feature_covariance(d: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |k, l| rho.powi(k.abs_diff(l) as i32))
}

pub fn gen_logistic_data(spec: &LogisticSpec) -> Result<LogisticData> {
    if spec.p < 2 || spec.m == 0 || spec.n_obs < spec.m {
        return Err(Error::InvalidInput("need p >= 2 and n_obs >= m >= 1".into()));
    }
    let d = spec.p - 1;
    let chol = Cholesky::new(feature_covariance(d, spec.rho))
        .ok_or_else(|| Error::InvalidInput(format!("rho {} gives a singular covariance", spec.rho)))?;
    let l = chol.l();
    let mut rng = rng_from_seed(spec.seed);
    let mut theta = vec![spec.intercept];
    theta.extend((0..d).map(|_| spec.prior_sd * rng.sample::<f64, _>(StandardNormal)));

    let mut features = Vec::with_capacity(spec.n_obs);
    let mut labels = Vec::with_capacity(spec.n_obs);
    for _ in 0..spec.n_obs {
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let f = &l * z;
        let eta = theta[0] + theta[1..].iter().zip(f.iter()).map(|(a, b)| a * b).sum::<f64>();
        let prob = 1.0 / (1.0 + (-eta).exp());
        labels.push(rng.random::<f64>() < prob);
        features.push(f.as_slice().to_vec());
    }
    LogisticData::new(&features, labels, theta)
}

/// Subset log posterior: likelihood of the subset plus `1/m` times the
/// log of an isotropic Gaussian prior.
#[derive(Debug, Clone, Copy)]
pub struct LogisticPosterior<'a> {
    pub data: &'a LogisticData,
    pub m: usize,
    pub prior_sd: f64,
}

impl<'a> LogisticPosterior<'a> {
    pub fn new(data: &'a LogisticData, m: usize) -> Self {
        Self { data, m, prior_sd: 5.0 }
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.data.p {
            return Err(Error::DimensionMismatch { expected: self.data.p, found: theta.len() });
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter".into()));
        }
        Ok(())
    }

    pub fn log_prior(&self, theta: &[f64]) -> f64 {
        let v = self.prior_sd * self.prior_sd;
        let p = theta.len() as f64;
        -0.5 * theta.iter().map(|t| t * t).sum::<f64>() / v - 0.5 * p * (2.0 * std::f64::consts::PI * v).ln()
    }

    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        (0..self.data.n_obs())
            .map(|j| {
                let eta: f64 = self.data.row(j).iter().zip(theta).map(|(a, b)| a * b).sum();
                // log sigma(eta) = -softplus(-eta); log(1 - sigma(eta)) = -softplus(eta)
                if self.data.y[j] {
                    -softplus(-eta)
                } else {
                    -softplus(eta)
                }
            })
            .sum()
    }

    pub fn log_density(&self, theta: &[f64]) -> Result<f64> {
        self.check(theta)?;
        let v = self.log_likelihood(theta) + self.log_prior(theta) / self.m as f64;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("log posterior".into()))
        }
    }

    pub fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check(theta)?;
        let inv_v = 1.0 / (self.prior_sd * self.prior_sd * self.m as f64);
        let mut g: Vec<f64> = theta.iter().map(|t| -t * inv_v).collect();
        for j in 0..self.data.n_obs() {
            let row = self.data.row(j);
            let eta: f64 = row.iter().zip(theta).map(|(a, b)| a * b).sum();
            let resid = f64::from(u8::from(self.data.y[j])) - 1.0 / (1.0 + (-eta).exp());
            g.iter_mut().zip(row).for_each(|(gk, xk)| *gk += resid * xk);
        }
        Ok(g)
    }
}

pub fn logistic_log_posterior(theta: &[f64], data: &LogisticData, m: usize) -> Result<f64> {
    LogisticPosterior::new(data, m).log_density(theta)
}

pub fn logistic_log_posterior_grad(theta: &[f64], data: &LogisticData, m: usize) -> Result<Vec<f64>> {
    LogisticPosterior::new(data, m).gradient(theta)
}
