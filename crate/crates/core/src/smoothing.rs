//! Random tree ensembles and local Gaussian block smoothing.

use rayon::prelude::*;

use crate::aggregation::tree_density;
use crate::error::{Error, Result};
use crate::gaussian::{product_of_gaussians, sample_moments, Gaussian, SampleMoments};
use crate::partition::{build_tree, PartitionConfig};
use crate::rng::{derive_seed, STREAM_MEMBER};
use crate::types::{Ensemble, SampleSet};

/// Settings for replacing uniform block distributions by Gaussians fitted
/// to the draws inside each block.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGaussianConfig {
    /// Relative ridge: when a subset covariance is not positive definite,
    /// `ridge * trace / p` is added to its diagonal.
    pub ridge: f64,
    /// Minimum draws per subset inside a block; `None` means `2p + 1`.
    pub min_points: Option<usize>,
}

impl Default for LocalGaussianConfig {
    fn default() -> Self {
        Self { ridge: 1e-8, min_points: None }
    }
}

impl LocalGaussianConfig {
    pub fn min_points_for(&self, p: usize) -> usize {
        self.min_points.unwrap_or(2 * p + 1).max(2)
    }
}

/// Within-block distribution used when aggregating.
#[derive(Debug, Clone, PartialEq)]
pub enum Smoothing {
    Uniform,
    LocalGaussian(LocalGaussianConfig),
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::LocalGaussian(LocalGaussianConfig::default())
    }
}

/// Precision-weighted product of per-subset Gaussian fits of the draws in
/// one block.
pub fn fit_local_gaussian(
    block_draws_per_subset: &[Vec<&[f64]>],
    cfg: &LocalGaussianConfig,
) -> Result<Gaussian> {
    let p = block_draws_per_subset
        .iter()
        .flat_map(|rows| rows.first())
        .map(|r| r.len())
        .next()
        .ok_or(Error::EmptyInput)?;
    let min_points = cfg.min_points_for(p);
    let parts = block_draws_per_subset
        .iter()
        .map(|rows| {
            if rows.len() < min_points {
                return Err(Error::InvalidInput(format!(
                    "{} draws in block, need {min_points}",
                    rows.len()
                )));
            }
            sample_moments(rows.iter().copied(), p)
        })
        .collect::<Result<Vec<SampleMoments>>>()?;
    product_of_gaussians(&parts, cfg.ridge)
}

/// Members hitting an empty product are rebuilt with a fresh seed at most
/// this many times.
pub const MAX_MEMBER_RETRIES: u64 = 8;

/// Build `trees` independent aggregated densities over `samples`.
///
/// Member `t` grows its tree from a seed derived from `master_seed` and `t`
/// alone, so the ensemble does not depend on thread scheduling.
pub fn build_ensemble(
    samples: &SampleSet,
    cfg: &PartitionConfig,
    trees: usize,
    smoothing: &Smoothing,
    master_seed: u64,
) -> Result<Ensemble> {
    if trees == 0 {
        return Err(Error::InvalidInput("an ensemble needs at least one tree".into()));
    }
    let built: Vec<_> = (0..trees as u64)
        .into_par_iter()
        .map(|t| {
            let base = derive_seed(master_seed, STREAM_MEMBER + t);
            let mut last_err = Error::EmptyProduct;
            for attempt in 0..=MAX_MEMBER_RETRIES {
                let seed = if attempt == 0 { base } else { derive_seed(base, attempt) };
                let tree = build_tree(samples, &cfg.clone().with_seed(seed))?;
                match tree_density(samples, &tree, smoothing) {
                    Ok(density) => return Ok((density, seed)),
                    Err(Error::EmptyProduct) => last_err = Error::EmptyProduct,
                    Err(e) => return Err(e),
                }
            }
            Err(last_err)
        })
        .collect::<Result<Vec<_>>>()?;
    let (members, seeds) = built.into_iter().unzip();
    Ensemble::new(members, seeds)
}
