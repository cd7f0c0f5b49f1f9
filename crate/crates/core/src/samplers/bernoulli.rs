use rand::Rng;
use rand_distr::{Beta as BetaDist, Distribution};
use statrs::distribution::{Beta, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::types::{Density1d, DrawMatrix, SampleSet};

use super::random_split;

/// Bernoulli observations split across subsets, each subset posterior
/// sampled exactly under a Beta prior raised to the power `1/m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliSpec {
    pub n_obs: usize,
    pub m: usize,
    /// Success probability; `None` means `2m / n_obs`.
    pub theta: Option<f64>,
    pub prior: (f64, f64),
    pub n_draws: usize,
    pub seed: u64,
}

impl Default for BernoulliSpec {
    fn default() -> Self {
        Self { n_obs: 10_000, m: 15, theta: None, prior: (2.0, 2.0), n_draws: 10_000, seed: 0 }
    }
}

impl BernoulliSpec {
    pub fn success_probability(&self) -> f64 {
        self.theta.unwrap_or(2.0 * self.m as f64 / self.n_obs as f64)
    }
}

/// Full-data Beta posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaTruth {
    pub alpha: f64,
    pub beta: f64,
    /// Total successes in the data.
    pub successes: usize,
}

impl BetaTruth {
    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn sd(&self) -> f64 {
        let s = self.alpha + self.beta;
        (self.alpha * self.beta / (s * s * (s + 1.0))).sqrt()
    }

    fn dist(&self) -> Beta {
        Beta::new(self.alpha, self.beta).expect("positive Beta parameters")
    }
}

impl Density1d for BetaTruth {
    fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let ln_b = ln_gamma(self.alpha) + ln_gamma(self.beta) - ln_gamma(self.alpha + self.beta);
        ((self.alpha - 1.0) * x.ln() + (self.beta - 1.0) * (1.0 - x).ln() - ln_b).exp()
    }

    fn mass(&self, lo: f64, hi: f64) -> f64 {
        let d = self.dist();
        (d.cdf(hi.clamp(0.0, 1.0)) - d.cdf(lo.clamp(0.0, 1.0))).max(0.0)
    }
}

/// Posterior of one subset holding `successes` out of `n` trials when the
/// prior `Beta(a, b)` is shared across `m` subsets as `prior^(1/m)`.
pub fn subset_posterior(successes: usize, n: usize, m: usize, prior: (f64, f64)) -> BetaTruth {
    let (a, b) = prior;
    let m = m as f64;
    BetaTruth {
        alpha: successes as f64 + (a - 1.0) / m + 1.0,
        beta: (n - successes) as f64 + (b - 1.0) / m + 1.0,
        successes,
    }
}

pub fn gen_rare_bernoulli(spec: &BernoulliSpec) -> Result<(SampleSet, BetaTruth)> {
    if spec.m == 0 || spec.n_obs < spec.m || spec.n_draws == 0 {
        return Err(Error::InvalidInput("need n_obs >= m >= 1 and n_draws >= 1".into()));
    }
    let theta = spec.success_probability();
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidInput(format!("success probability {theta} outside (0, 1)")));
    }
    let (a, b) = spec.prior;
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidInput("Beta prior parameters must be positive".into()));
    }
    let mut rng = rng_from_seed(spec.seed);
    let y: Vec<bool> = (0..spec.n_obs).map(|_| rng.random::<f64>() < theta).collect();
    let groups = random_split(spec.n_obs, spec.m, &mut rng);
    let mut subsets = Vec::with_capacity(spec.m);
    for (i, g) in groups.iter().enumerate() {
        let s = g.iter().filter(|&&j| y[j]).count();
        let post = subset_posterior(s, g.len(), spec.m, spec.prior);
        let post = BetaDist::new(post.alpha, post.beta)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let draws = (0..spec.n_draws).map(|_| post.sample(&mut rng)).collect();
        subsets.push(DrawMatrix::from_scalars(draws, i)?);
    }
    let successes = y.iter().filter(|&&v| v).count();
    let truth = BetaTruth {
        alpha: a + successes as f64,
        beta: b + (spec.n_obs - successes) as f64,
        successes,
    };
    Ok((SampleSet::new(subsets)?, truth))
}
