//! Combining subset histograms that share one partition.
//!
//! For blocks `A_k` with per-subset counts `n_k^(i)` the product of the
//! subset histograms is again a K-block histogram with weights
//!
//! ```text
//! w_k ∝ prod_i n_k^(i) / (N_i |A_k|) * |A_k|  =  prod_i n_k^(i) / N_i / |A_k|^(m-1)
//! ```
//!
//! computed here in log space. Pairwise aggregation repeatedly combines
//! subsets two at a time, resampling each pair's product before the next
//! stage.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;
use crate::partition::{build_tree, leaves, CutRule, PartitionConfig};
use crate::rng::{derive_seed, rng_from_seed, STREAM_RESAMPLE, STREAM_STAGE};
use crate::smoothing::{build_ensemble, fit_local_gaussian, Smoothing};
use crate::types::{AggregatedDensity, Block, BlockDist, DrawMatrix, Ensemble, SampleSet, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// One shared tree over all subsets.
    OneStage,
    /// Recursive pairing of subsets in index order.
    Pairwise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregationConfig {
    pub rule: CutRule,
    pub strategy: Strategy,
    /// Draws returned from the final aggregated density.
    pub n_draws_final: usize,
    /// Draws produced by each intermediate pairwise combination.
    pub n_draws_intermediate: usize,
    /// Trees per ensemble.
    pub trees: usize,
    /// Occupancy fraction used by the final stage; earlier pairwise stages
    /// double it once per remaining stage.
    pub delta_rho_final: f64,
    pub delta_a: f64,
    pub smoothing: Smoothing,
    pub seed: u64,
}

impl AggregationConfig {
    pub const DEFAULT_TREES: usize = 40;
    pub const DEFAULT_INTERMEDIATE_DRAWS: usize = 50_000;
    pub const DEFAULT_FINAL_DRAWS: usize = 10_000;

    pub fn new(rule: CutRule) -> Self {
        Self {
            rule,
            strategy: Strategy::Pairwise,
            n_draws_final: Self::DEFAULT_FINAL_DRAWS,
            n_draws_intermediate: Self::DEFAULT_INTERMEDIATE_DRAWS,
            trees: Self::DEFAULT_TREES,
            delta_rho_final: PartitionConfig::DEFAULT_DELTA_RHO,
            delta_a: PartitionConfig::DEFAULT_DELTA_A,
            smoothing: Smoothing::default(),
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_draws_final == 0 || self.n_draws_intermediate == 0 {
            return Err(Error::InvalidInput("draw counts must be at least 1".into()));
        }
        if self.trees == 0 {
            return Err(Error::InvalidInput("need at least one tree".into()));
        }
        Ok(())
    }

    fn partition(&self, delta_rho: f64) -> PartitionConfig {
        PartitionConfig::new(self.rule)
            .with_delta_rho(delta_rho)
            .with_delta_a(self.delta_a)
    }
}

/// Normalized product weights of the blocks of one partition.
///
/// Blocks where any subset has no draws get weight exactly zero.
pub fn aggregate_weights(blocks: &[Block], counts: &[Vec<usize>], totals: &[usize]) -> Result<Vec<f64>> {
    if blocks.len() != counts.len() {
        return Err(Error::DimensionMismatch { expected: blocks.len(), found: counts.len() });
    }
    let m = totals.len();
    if let Some(c) = counts.iter().find(|c| c.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, found: c.len() });
    }
    let log_totals: f64 = totals.iter().map(|&n| (n as f64).ln()).sum();
    let log_w: Vec<f64> = blocks
        .iter()
        .zip(counts)
        .map(|(b, c)| {
            if c.contains(&0) {
                f64::NEG_INFINITY
            } else {
                c.iter().map(|&n| (n as f64).ln()).sum::<f64>()
                    - log_totals
                    - (m as f64 - 1.0) * b.log_volume()
            }
        })
        .collect();
    let z = log_sum_exp(&log_w);
    if z == f64::NEG_INFINITY {
        return Err(Error::EmptyProduct);
    }
    let mut w: Vec<f64> = log_w.iter().map(|&lw| (lw - z).exp()).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    Ok(w)
}

/// Aggregated density of a tree grown over `samples`.
pub fn tree_density(samples: &SampleSet, tree: &TreeNode, smoothing: &Smoothing) -> Result<AggregatedDensity> {
    let leaves = leaves(tree);
    let blocks: Vec<Block> = leaves.iter().map(|l| l.block.clone()).collect();
    let counts: Vec<Vec<usize>> = leaves.iter().map(|l| l.counts.clone()).collect();
    let weights = aggregate_weights(&blocks, &counts, &samples.totals())?;
    let dists = match smoothing {
        Smoothing::Uniform => vec![BlockDist::Uniform; blocks.len()],
        Smoothing::LocalGaussian(cfg) => {
            let min_points = cfg.min_points_for(samples.dim());
            leaves
                .iter()
                .zip(&weights)
                .map(|(leaf, &w)| {
                    if w == 0.0 || leaf.counts.iter().any(|&c| c < min_points) {
                        return BlockDist::Uniform;
                    }
                    let per_subset: Vec<Vec<&[f64]>> = samples
                        .subsets()
                        .iter()
                        .zip(&leaf.members)
                        .map(|(s, idx)| idx.iter().map(|&j| s.row(j)).collect())
                        .collect();
                    match fit_local_gaussian(&per_subset, cfg) {
                        Ok(g) => BlockDist::Gaussian(g),
                        Err(_) => BlockDist::Uniform,
                    }
                })
                .collect()
        }
    };
    AggregatedDensity::new(blocks, weights, dists)
}

/// Anything the aggregator can draw from.
pub trait Resample {
    fn dim(&self) -> usize;
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64>;
}

impl Resample for AggregatedDensity {
    fn dim(&self) -> usize {
        AggregatedDensity::dim(self)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.sample(rng)
    }
}

impl Resample for Ensemble {
    fn dim(&self) -> usize {
        Ensemble::dim(self)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.sample(rng)
    }
}

/// Draw `n` points: for an ensemble a member is picked uniformly, then a
/// block by weight, then a point from the block distribution.
pub fn resample<S: Resample>(density: &S, n: usize, seed: u64) -> Result<DrawMatrix> {
    if n == 0 {
        return Err(Error::InvalidInput("cannot resample zero draws".into()));
    }
    let mut rng = rng_from_seed(seed);
    let p = density.dim();
    let mut data = Vec::with_capacity(n * p);
    for _ in 0..n {
        data.extend(density.draw(&mut rng));
    }
    DrawMatrix::new(data, p, 0)
}

/// Single tree, uniform blocks: grow a tree with `cfg`, weight its leaves,
/// and draw `n_draws` points using `seed`.
pub fn one_stage_aggregate(
    samples: &SampleSet,
    cfg: &PartitionConfig,
    n_draws: usize,
    seed: u64,
) -> Result<(AggregatedDensity, DrawMatrix)> {
    let tree = build_tree(samples, cfg)?;
    let density = tree_density(samples, &tree, &Smoothing::Uniform)?;
    let draws = resample(&density, n_draws, seed)?;
    Ok((density, draws))
}

/// Output of an aggregation run.
#[derive(Debug, Clone)]
pub struct Aggregation {
    pub ensemble: Ensemble,
    pub draws: DrawMatrix,
}

fn combine(
    samples: &SampleSet,
    pcfg: &PartitionConfig,
    cfg: &AggregationConfig,
    n_draws: usize,
    seed: u64,
) -> Result<Aggregation> {
    let ensemble = build_ensemble(samples, pcfg, cfg.trees, &cfg.smoothing, seed)?;
    let draws = resample(&ensemble, n_draws, derive_seed(seed, STREAM_RESAMPLE))?;
    Ok(Aggregation { ensemble, draws })
}

/// Aggregate with the configured strategy.
pub fn aggregate(samples: &SampleSet, cfg: &AggregationConfig) -> Result<Aggregation> {
    cfg.validate()?;
    match cfg.strategy {
        Strategy::OneStage => {
            let pcfg = cfg.partition(cfg.delta_rho_final);
            pcfg.validate(samples.dim())?;
            combine(samples, &pcfg, cfg, cfg.n_draws_final, cfg.seed)
        }
        Strategy::Pairwise => pairwise_aggregate(samples, cfg),
    }
}

/// Number of pairwise stages needed to reduce `m` subsets to one.
pub fn pairwise_stages(m: usize) -> usize {
    let mut stages = 0;
    let mut k = m;
    while k > 1 {
        k = k.div_ceil(2);
        stages += 1;
    }
    stages
}

/// Recursive pairwise aggregation.
///
/// Stage `s` of `S` pairs the current subsets in index order, uses
/// `delta_rho_final * 2^(S - 1 - s)`, and draws `n_draws_intermediate`
/// points per pair (the final stage draws `n_draws_final`). An unpaired
/// last subset passes to the next stage unchanged. The single pair of the
/// final stage uses `cfg.seed` directly, so with two subsets this matches
/// [`Strategy::OneStage`].
pub fn pairwise_aggregate(samples: &SampleSet, cfg: &AggregationConfig) -> Result<Aggregation> {
    cfg.validate()?;
    let m = samples.m();
    if m < 2 {
        return Err(Error::InvalidInput("pairwise aggregation needs at least two subsets".into()));
    }
    let stages = pairwise_stages(m);
    let mut current: Vec<DrawMatrix> = samples.subsets().to_vec();
    for stage in 0..stages {
        let delta_rho = cfg.delta_rho_final * 2f64.powi((stages - 1 - stage) as i32);
        let pcfg = cfg.partition(delta_rho);
        pcfg.validate(samples.dim())?;
        let last = stage + 1 == stages;
        let n_draws = if last { cfg.n_draws_final } else { cfg.n_draws_intermediate };

        let pairs: Vec<(usize, &[DrawMatrix])> = current.chunks(2).enumerate().collect();
        let results: Vec<Result<Option<Aggregation>>> = pairs
            .par_iter()
            .map(|&(j, chunk)| {
                if chunk.len() == 1 {
                    return Ok(None);
                }
                let seed = if last {
                    cfg.seed
                } else {
                    derive_seed(cfg.seed, STREAM_STAGE + ((stage as u64) << 32) + j as u64)
                };
                let set = SampleSet::new(chunk.to_vec())?;
                combine(&set, &pcfg, cfg, n_draws, seed)
                    .map(Some)
                    .map_err(|e| Error::Stage {
                        stage,
                        first: 2 * j,
                        second: 2 * j + 1,
                        source: Box::new(e),
                    })
            })
            .collect();

        let mut next = Vec::with_capacity(current.len().div_ceil(2));
        for ((j, chunk), result) in pairs.iter().zip(results) {
            match result? {
                Some(agg) => {
                    if last {
                        return Ok(agg);
                    }
                    next.push(agg.draws.with_subset_id(*j));
                }
                None => next.push(chunk[0].clone().with_subset_id(*j)),
            }
        }
        current = next;
    }
    unreachable!("the final stage always combines one pair")
}
