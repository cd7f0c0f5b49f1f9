//! Accuracy measures for aggregated draws.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gaussian::{kl_divergence, sample_moments, Gaussian};
use crate::rng::rng_from_seed;
use crate::types::{Density1d, DrawMatrix};

fn same_shape(a: &DrawMatrix, b: &DrawMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), found: a.dim() });
    }
    if a.n_draws() != b.n_draws() {
        return Err(Error::InvalidInput(format!(
            "draw counts differ ({} vs {}); resample with match_draw_count",
            a.n_draws(),
            b.n_draws()
        )));
    }
    Ok(())
}

/// Resample `draws` with replacement to exactly `n` rows.
pub fn match_draw_count(draws: &DrawMatrix, n: usize, seed: u64) -> Result<DrawMatrix> {
    if n == draws.n_draws() {
        return Ok(draws.clone());
    }
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(n * draws.dim());
    for _ in 0..n {
        out.extend_from_slice(draws.row(rng.random_range(0..draws.n_draws())));
    }
    DrawMatrix::new(out, draws.dim(), draws.subset_id())
}

/// `|| (sum_j approx_j - sum_j truth_j) / (p T) ||_2`.
pub fn rmse_posterior_mean(approx: &DrawMatrix, truth: &DrawMatrix) -> Result<f64> {
    same_shape(approx, truth)?;
    let scale = (approx.dim() * approx.n_draws()) as f64;
    let (sa, st) = (column_sums(approx), column_sums(truth));
    Ok(sa.iter().zip(&st).map(|(a, t)| ((a - t) / scale).powi(2)).sum::<f64>().sqrt())
}

/// Root mean square over coordinates of the difference of posterior means.
/// Draw counts may differ.
pub fn rmse_coordinate(approx: &DrawMatrix, truth: &DrawMatrix) -> Result<f64> {
    if approx.dim() != truth.dim() {
        return Err(Error::DimensionMismatch { expected: truth.dim(), found: approx.dim() });
    }
    let (ma, mt) = (approx.mean(), truth.mean());
    Ok((ma.iter().zip(&mt).map(|(a, t)| (a - t).powi(2)).sum::<f64>() / approx.dim() as f64).sqrt())
}

fn column_sums(d: &DrawMatrix) -> Vec<f64> {
    let mut s = vec![0.0; d.dim()];
    for r in d.rows() {
        s.iter_mut().zip(r).for_each(|(a, v)| *a += v);
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlDirection {
    /// `KL(fit(a) || fit(b))`
    Forward,
    /// `KL(fit(b) || fit(a))`
    Reverse,
}

/// Relative ridge used when a fitted covariance is singular.
const KL_RIDGE: f64 = 1e-8;

fn fit(d: &DrawMatrix) -> Result<Gaussian> {
    let m = sample_moments(d.rows(), d.dim())?;
    match Gaussian::new(m.mean.clone(), m.cov.clone()) {
        Ok(g) => Ok(g),
        Err(Error::SingularCovariance) => {
            let p = d.dim();
            let t = m.cov.trace() / p as f64;
            let bump = KL_RIDGE * if t > 0.0 { t } else { 1.0 };
            Gaussian::new(m.mean, m.cov + DMatrix::identity(p, p) * bump)
        }
        Err(e) => Err(e),
    }
}

/// KL divergence between Gaussian moment fits of two draw sets.
pub fn gaussian_kl(a: &DrawMatrix, b: &DrawMatrix, direction: KlDirection) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let (ga, gb) = (fit(a)?, fit(b)?);
    Ok(match direction {
        KlDirection::Forward => kl_divergence(&ga, &gb),
        KlDirection::Reverse => kl_divergence(&gb, &ga),
    })
}

/// `sqrt(sum_j ||approx_j - theta*||^2 / sum_j ||truth_j - theta*||^2)`.
pub fn concentration_ratio(approx: &DrawMatrix, truth: &DrawMatrix, theta_star: &[f64]) -> Result<f64> {
    same_shape(approx, truth)?;
    if theta_star.len() != truth.dim() {
        return Err(Error::DimensionMismatch { expected: truth.dim(), found: theta_star.len() });
    }
    let spread = |d: &DrawMatrix| -> f64 {
        d.rows()
            .map(|r| r.iter().zip(theta_star).map(|(x, t)| (x - t).powi(2)).sum::<f64>())
            .sum()
    };
    let den = spread(truth);
    if den == 0.0 {
        return Err(Error::InvalidInput("every truth draw equals theta*; ratio undefined".into()));
    }
    Ok((spread(approx) / den).sqrt())
}

fn check_grid(bins: usize, range: (f64, f64)) -> Result<()> {
    if bins == 0 || !(range.0 < range.1) || !range.0.is_finite() || !range.1.is_finite() {
        return Err(Error::InvalidInput(format!("bad grid: {bins} bins over {range:?}")));
    }
    Ok(())
}

fn truth_masses<D: Density1d + ?Sized>(truth: &D, bins: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    let w = (hi - lo) / bins as f64;
    let mut m: Vec<f64> = (0..bins)
        .map(|b| truth.mass(lo + b as f64 * w, lo + (b + 1) as f64 * w).max(0.0))
        .collect();
    m.push((1.0 - m.iter().sum::<f64>()).max(0.0));
    m
}

fn tv(p: &[f64], q: &[f64]) -> f64 {
    (0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()).clamp(0.0, 1.0)
}

/// Histogram proportions of 1-D draws over `bins` equal cells of `range`,
/// followed by the fraction falling outside the range.
pub fn histogram(draws: &DrawMatrix, bins: usize, range: (f64, f64)) -> Result<Vec<f64>> {
    if draws.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: draws.dim() });
    }
    check_grid(bins, range)?;
    let (lo, hi) = range;
    let mut counts = vec![0usize; bins + 1];
    for &x in draws.as_slice() {
        let cell = if x < lo || x > hi {
            bins
        } else {
            (((x - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1)
        };
        counts[cell] += 1;
    }
    let n = draws.n_draws() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Total variation between binned 1-D draws and a density. Mass outside
/// `range` forms one extra cell on both sides.
pub fn grid_tv<D: Density1d + ?Sized>(
    draws: &DrawMatrix,
    truth: &D,
    bins: usize,
    range: (f64, f64),
) -> Result<f64> {
    let emp = histogram(draws, bins, range)?;
    Ok(tv(&emp, &truth_masses(truth, bins, range)))
}

/// Total variation between two densities binned on the same grid.
pub fn grid_tv_between<A, B>(estimate: &A, truth: &B, bins: usize, range: (f64, f64)) -> Result<f64>
where
    A: Density1d + ?Sized,
    B: Density1d + ?Sized,
{
    check_grid(bins, range)?;
    Ok(tv(&truth_masses(estimate, bins, range), &truth_masses(truth, bins, range)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub method: String,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn push(&mut self, method: &str, metric: &str, value: f64, seed: u64) {
        self.rows.push(EvalRow { method: method.into(), metric: metric.into(), value, seed });
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("method,metric,value,seed\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{:.16e},{}", r.method, r.metric, r.value, r.seed);
        }
        s
    }
}

/// Every draw-based metric comparing `approx` against `truth`. Draw counts
/// are matched by resampling `approx` when they differ.
pub fn evaluate(
    method: &str,
    approx: &DrawMatrix,
    truth: &DrawMatrix,
    theta_star: Option<&[f64]>,
    seed: u64,
) -> Result<EvalReport> {
    let matched = match_draw_count(approx, truth.n_draws(), seed)?;
    let mut r = EvalReport::default();
    r.push(method, "rmse_posterior_mean", rmse_posterior_mean(&matched, truth)?, seed);
    r.push(method, "rmse_coordinate", rmse_coordinate(approx, truth)?, seed);
    r.push(method, "kl_truth_approx", gaussian_kl(truth, approx, KlDirection::Forward)?, seed);
    if let Some(t) = theta_star {
        r.push(method, "concentration_ratio", concentration_ratio(&matched, truth, t)?, seed);
    }
    Ok(r)
}
