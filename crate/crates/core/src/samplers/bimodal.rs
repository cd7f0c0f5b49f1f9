use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numeric::simpson;
use crate::rng::rng_from_seed;
use crate::types::{Density1d, DrawMatrix, SampleSet};

/// Subsets drawn from two-component normal mixtures whose parameters are
/// perturbed per subset.
#[derive(Debug, Clone, PartialEq)]
pub struct BimodalSpec {
    pub m: usize,
    pub n_per_subset: usize,
    pub weights: [f64; 2],
    pub means: [f64; 2],
    pub sds: [f64; 2],
    /// Standard deviation of the additive perturbation of each mean.
    pub mean_perturbation_sd: f64,
    /// Standard deviation of `delta`; each sd becomes `sd + |delta|`.
    pub sd_perturbation_sd: f64,
    pub seed: u64,
}

impl Default for BimodalSpec {
    fn default() -> Self {
        Self {
            m: 10,
            n_per_subset: 10_000,
            weights: [0.27, 0.73],
            means: [-5.0, 5.0],
            sds: [1.0, 4.0],
            mean_perturbation_sd: 0.5,
            sd_perturbation_sd: 0.1,
            seed: 0,
        }
    }
}

/// One subset's mixture `w_1 N(mu_1, sd_1^2) + w_2 N(mu_2, sd_2^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mixture2 {
    pub weights: [f64; 2],
    pub means: [f64; 2],
    pub sds: [f64; 2],
}

impl Mixture2 {
    pub fn log_pdf(&self, x: f64) -> f64 {
        let terms = [0, 1].map(|l| {
            let z = (x - self.means[l]) / self.sds[l];
            self.weights[l].ln() - 0.5 * z * z - self.sds[l].ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
        });
        crate::numeric::log_sum_exp(&terms)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let l = usize::from(rng.random::<f64>() >= self.weights[0]);
        self.means[l] + self.sds[l] * rng.sample::<f64, _>(rand_distr::StandardNormal)
    }
}

/// Normalized product of the subset mixture densities.
#[derive(Debug, Clone)]
pub struct BimodalTruth {
    pub subsets: Vec<Mixture2>,
    lo: f64,
    hi: f64,
    log_norm: f64,
}

/// Quadrature intervals used to normalize the product density.
const NORMALIZING_INTERVALS: usize = 40_000;

impl BimodalTruth {
    pub fn new(subsets: Vec<Mixture2>) -> Result<Self> {
        if subsets.is_empty() {
            return Err(Error::EmptyInput);
        }
        let lo = subsets
            .iter()
            .flat_map(|s| [0, 1].map(|l| s.means[l] - 10.0 * s.sds[l]))
            .fold(f64::INFINITY, f64::min);
        let hi = subsets
            .iter()
            .flat_map(|s| [0, 1].map(|l| s.means[l] + 10.0 * s.sds[l]))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut truth = Self { subsets, lo, hi, log_norm: 0.0 };
        let step = (hi - lo) / NORMALIZING_INTERVALS as f64;
        let peak = (0..=NORMALIZING_INTERVALS)
            .map(|i| truth.log_unnormalized(lo + i as f64 * step))
            .fold(f64::NEG_INFINITY, f64::max);
        let z = simpson(|x| (truth.log_unnormalized(x) - peak).exp(), lo, hi, NORMALIZING_INTERVALS);
        truth.log_norm = peak + z.ln();
        Ok(truth)
    }

    pub fn log_unnormalized(&self, x: f64) -> f64 {
        self.subsets.iter().map(|s| s.log_pdf(x)).sum()
    }

    /// Interval outside which the density is negligible.
    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// `points` equally spaced `(x, density)` pairs over `[lo, hi]`.
    pub fn grid(&self, lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
        let step = (hi - lo) / (points - 1) as f64;
        (0..points)
            .map(|i| {
                let x = lo + i as f64 * step;
                (x, Density1d::pdf(self, x))
            })
            .collect()
    }
}

impl Density1d for BimodalTruth {
    fn pdf(&self, x: f64) -> f64 {
        (self.log_unnormalized(x) - self.log_norm).exp()
    }
}

fn perturbation(sd: f64) -> Result<Option<Normal<f64>>> {
    if sd == 0.0 {
        return Ok(None);
    }
    Normal::new(0.0, sd)
        .map(Some)
        .map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn gen_bimodal(spec: &BimodalSpec) -> Result<(SampleSet, BimodalTruth)> {
    if spec.m == 0 || spec.n_per_subset == 0 {
        return Err(Error::EmptyInput);
    }
    if (spec.weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 || spec.weights.iter().any(|w| *w <= 0.0) {
        return Err(Error::InvalidInput("mixture weights must be positive and sum to 1".into()));
    }
    if spec.sds.iter().any(|s| *s <= 0.0) {
        return Err(Error::InvalidInput("mixture sds must be positive".into()));
    }
    let eps = perturbation(spec.mean_perturbation_sd)?;
    let delta = perturbation(spec.sd_perturbation_sd)?;
    let mut rng = rng_from_seed(spec.seed);
    let draw = |d: &Option<Normal<f64>>, rng: &mut crate::rng::PartRng| d.map_or(0.0, |d| d.sample(rng));

    let mut mixtures = Vec::with_capacity(spec.m);
    let mut subsets = Vec::with_capacity(spec.m);
    for i in 0..spec.m {
        let mut means = spec.means;
        let mut sds = spec.sds;
        for l in 0..2 {
            means[l] += draw(&eps, &mut rng);
            sds[l] += draw(&delta, &mut rng).abs();
        }
        let mix = Mixture2 { weights: spec.weights, means, sds };
        let values = (0..spec.n_per_subset).map(|_| mix.sample(&mut rng)).collect();
        subsets.push(DrawMatrix::from_scalars(values, i)?);
        mixtures.push(mix);
    }
    Ok((SampleSet::new(subsets)?, BimodalTruth::new(mixtures)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_integrates_to_one() {
        let (_, truth) = gen_bimodal(&BimodalSpec { n_per_subset: 10, ..Default::default() }).unwrap();
        let (lo, hi) = truth.support();
        let total = simpson(|x| truth.pdf(x), lo, hi, 100_000);
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn zero_perturbation_gives_identical_subsets() {
        let spec = BimodalSpec {
            m: 3,
            n_per_subset: 10,
            mean_perturbation_sd: 0.0,
            sd_perturbation_sd: 0.0,
            ..Default::default()
        };
        let (_, truth) = gen_bimodal(&spec).unwrap();
        let base = Mixture2 { weights: [0.27, 0.73], means: [-5.0, 5.0], sds: [1.0, 4.0] };
        assert!(truth.subsets.iter().all(|s| *s == base));
        // Truth is proportional to the base mixture cubed.
        let ratio = |x: f64| truth.pdf(x).ln() - 3.0 * base.log_pdf(x);
        assert!((ratio(-5.0) - ratio(4.0)).abs() < 1e-9);
    }

    #[test]
    fn truth_has_two_modes() {
        for seed in 0..5 {
            let (_, truth) = gen_bimodal(&BimodalSpec { n_per_subset: 10, seed, ..Default::default() }).unwrap();
            let g = truth.grid(-15.0, 20.0, 10_000);
            let maxima: Vec<f64> = g
                .windows(3)
                .filter(|w| w[1].1 > w[0].1 && w[1].1 > w[2].1)
                .map(|w| w[1].0)
                .collect();
            assert_eq!(maxima.len(), 2, "seed {seed}: {maxima:?}");
            assert!((maxima[0] + 5.0).abs() < 1.5 && (maxima[1] - 5.0).abs() < 2.0, "{maxima:?}");
        }
    }

    #[test]
    fn subset_draws_match_their_mixture() {
        let (set, truth) = gen_bimodal(&BimodalSpec::default()).unwrap();
        for (s, mix) in set.subsets().iter().zip(&truth.subsets) {
            let below = s.as_slice().iter().filter(|&&x| x < 0.0).count() as f64 / s.n_draws() as f64;
            let expected: f64 = (0..2)
                .map(|l| mix.weights[l] * crate::numeric::std_normal_cdf(-mix.means[l] / mix.sds[l]))
                .sum();
            assert!((below - expected).abs() < 0.015, "{below} vs {expected}");
        }
    }
}
