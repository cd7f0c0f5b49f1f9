//! Multivariate Gaussian utilities: moment fitting, precision-weighted
//! products, sampling, and closed-form KL divergence.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A Gaussian with a cached lower Cholesky factor of its covariance.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: cov.nrows(),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gaussian parameters".into()));
        }
        // Symmetrize to scrub rounding asymmetry from matrix products.
        let cov = (&cov + cov.transpose()) * 0.5;
        let chol = Cholesky::new(cov.clone())
            .ok_or(Error::SingularCovariance)?
            .l();
        Ok(Self { mean, cov, chol })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample(StandardNormal)));
        (&self.mean + &self.chol * z).as_slice().to_vec()
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let p = self.dim();
        let diff = DVector::from_column_slice(x) - &self.mean;
        let z = self
            .chol
            .solve_lower_triangular(&diff)
            .expect("cholesky factor has a positive diagonal");
        -0.5 * (z.norm_squared() + self.log_det() + p as f64 * (2.0 * std::f64::consts::PI).ln())
    }

    pub fn precision(&self) -> DMatrix<f64> {
        Cholesky::new(self.cov.clone())
            .expect("covariance validated at construction")
            .inverse()
    }
}

/// Sample mean and unbiased (n - 1) sample covariance.
#[derive(Debug, Clone)]
pub struct SampleMoments {
    pub n: usize,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

pub fn sample_moments<'a, I>(rows: I, p: usize) -> Result<SampleMoments>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let rows: Vec<&[f64]> = rows.into_iter().collect();
    let n = rows.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 draws for a covariance, got {n}"
        )));
    }
    let mut mean = DVector::zeros(p);
    for r in &rows {
        if r.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: r.len() });
        }
        mean += DVector::from_column_slice(r);
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(p, p);
    for r in &rows {
        let d = DVector::from_column_slice(r) - &mean;
        cov.ger(1.0, &d, &d, 1.0);
    }
    cov /= (n - 1) as f64;
    Ok(SampleMoments { n, mean, cov })
}

/// Inverse of `cov`. When `cov` is not numerically positive definite, a
/// ridge of `ridge_scale * trace / p` is added to the diagonal and the
/// factorization retried once.
pub fn regularized_precision(cov: &DMatrix<f64>, ridge_scale: f64) -> Result<DMatrix<f64>> {
    if let Some(ch) = Cholesky::<f64, Dyn>::new(cov.clone()) {
        return Ok(ch.inverse());
    }
    let p = cov.nrows();
    let ridge = ridge_scale * cov.trace() / p as f64;
    if !(ridge > 0.0) {
        return Err(Error::SingularCovariance);
    }
    let mut reg = cov.clone();
    for i in 0..p {
        reg[(i, i)] += ridge;
    }
    Cholesky::<f64, Dyn>::new(reg)
        .map(|ch| ch.inverse())
        .ok_or(Error::SingularCovariance)
}

/// Precision-weighted product of Gaussian fits:
/// `cov = (sum_i cov_i^-1)^-1`, `mean = cov * sum_i cov_i^-1 mean_i`.
pub fn product_of_gaussians(parts: &[SampleMoments], ridge_scale: f64) -> Result<Gaussian> {
    let first = parts.first().ok_or(Error::EmptyInput)?;
    let p = first.mean.len();
    let mut precision = DMatrix::zeros(p, p);
    let mut shift = DVector::zeros(p);
    for part in parts {
        if part.mean.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: part.mean.len() });
        }
        let prec = regularized_precision(&part.cov, ridge_scale)?;
        shift += &prec * &part.mean;
        precision += prec;
    }
    let precision = (&precision + precision.transpose()) * 0.5;
    let cov = Cholesky::new(precision)
        .ok_or(Error::SingularCovariance)?
        .inverse();
    let mean = &cov * shift;
    Gaussian::new(mean, cov)
}

/// `KL(a || b)` between two Gaussians.
pub fn kl_divergence(a: &Gaussian, b: &Gaussian) -> f64 {
    let p = a.dim() as f64;
    let b_prec = b.precision();
    let diff = b.mean() - a.mean();
    let trace = (&b_prec * a.cov()).trace();
    let quad = (diff.transpose() * &b_prec * &diff)[(0, 0)];
    0.5 * (trace + quad - p + b.log_det() - a.log_det())
}
