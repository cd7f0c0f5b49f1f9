use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::types::DrawMatrix;

/// Adaptive random-walk Metropolis settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RwmConfig {
    /// Iterations kept after burn-in, before thinning.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Proposal sd per coordinate before adaptation starts.
    pub initial_scale: f64,
    /// Iteration at which the empirical covariance takes over.
    pub adapt_start: usize,
    /// The proposal factor is refreshed this often.
    pub adapt_every: usize,
    /// Jitter added to the running covariance.
    pub epsilon: f64,
    /// A window of this many iterations without an acceptance is an error.
    pub window: usize,
}

impl Default for RwmConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            burn_in: 5_000,
            thin: 1,
            seed: 0,
            initial_scale: 0.1,
            adapt_start: 500,
            adapt_every: 50,
            epsilon: 1e-6,
            window: 5_000,
        }
    }
}

/// Post-burn-in, thinned draws with the overall acceptance rate.
#[derive(Debug, Clone)]
pub struct Chain {
    pub draws: DrawMatrix,
    pub acceptance_rate: f64,
}

/// Running mean and scatter matrix (Welford).
struct Running {
    n: f64,
    mean: DVector<f64>,
    scatter: DMatrix<f64>,
}

impl Running {
    fn push(&mut self, x: &DVector<f64>) {
        self.n += 1.0;
        let d = x - &self.mean;
        self.mean += &d / self.n;
        let d2 = x - &self.mean;
        self.scatter.ger(1.0, &d, &d2, 1.0);
    }

    fn cov(&self) -> DMatrix<f64> {
        let s = &self.scatter / (self.n - 1.0);
        (&s + s.transpose()) * 0.5
    }
}

pub fn adaptive_rwm_chain<F>(log_target: F, theta0: &[f64], cfg: &RwmConfig) -> Result<Chain>
where
    F: Fn(&[f64]) -> f64,
{
    let p = theta0.len();
    if p == 0 {
        return Err(Error::EmptyInput);
    }
    if cfg.thin == 0 || cfg.iterations == 0 || cfg.window == 0 || cfg.adapt_every == 0 {
        return Err(Error::InvalidInput("iterations, thin, window and adapt_every must be positive".into()));
    }
    let mut x = DVector::from_column_slice(theta0);
    let mut lp = log_target(theta0);
    if !lp.is_finite() {
        return Err(Error::NonFinite("log target at the initial point".into()));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let scale = 2.38 * 2.38 / p as f64;
    let mut factor = DMatrix::<f64>::identity(p, p) * cfg.initial_scale;
    let mut stats = Running { n: 0.0, mean: DVector::zeros(p), scatter: DMatrix::zeros(p, p) };

    let total = cfg.burn_in + cfg.iterations;
    let mut kept = Vec::with_capacity(cfg.iterations / cfg.thin * p + p);
    let mut accepted = 0usize;
    let mut accepted_in_window = 0usize;
    for t in 0..total {
        if t >= cfg.adapt_start && t > p && t % cfg.adapt_every == 0 {
            let c = stats.cov() * scale + DMatrix::identity(p, p) * (scale * cfg.epsilon);
            if let Some(ch) = Cholesky::new(c) {
                factor = ch.l();
            }
        }
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = &x + &factor * z;
        let lq = log_target(y.as_slice());
        if lq.is_finite() && rng.random::<f64>().ln() < lq - lp {
            x = y;
            lp = lq;
            accepted += 1;
            accepted_in_window += 1;
        }
        stats.push(&x);
        if (t + 1) % cfg.window == 0 {
            if accepted_in_window == 0 {
                return Err(Error::NoAcceptance { window: cfg.window });
            }
            accepted_in_window = 0;
        }
        if t >= cfg.burn_in && (t - cfg.burn_in + 1).is_multiple_of(cfg.thin) {
            kept.extend_from_slice(x.as_slice());
        }
    }
    Ok(Chain {
        draws: DrawMatrix::new(kept, p, 0)?,
        acceptance_rate: accepted as f64 / total as f64,
    })
}
