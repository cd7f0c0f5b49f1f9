//! Embarrassingly parallel MCMC aggregation with random partition trees.
//!
//! Each machine samples its own subset posterior. The draws are
//! partitioned by a shared tree, subset histograms are multiplied block by
//! block and renormalized, and the resulting piecewise density is resampled.
//!
//! ```
//! use part_core::{aggregate, AggregationConfig, CutRule, DrawMatrix, SampleSet, Strategy};
//!
//! let a = DrawMatrix::from_scalars((0..400).map(|i| i as f64 / 400.0).collect(), 0).unwrap();
//! let b = DrawMatrix::from_scalars((0..400).map(|i| 0.2 + i as f64 / 500.0).collect(), 1).unwrap();
//! let samples = SampleSet::new(vec![a, b]).unwrap();
//! let mut cfg = AggregationConfig::new(CutRule::Kd);
//! cfg.strategy = Strategy::OneStage;
//! cfg.trees = 4;
//! cfg.n_draws_final = 1000;
//! let out = aggregate(&samples, &cfg).unwrap();
//! assert_eq!(out.draws.n_draws(), 1000);
//! ```

pub mod aggregation;
pub mod baselines;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod metrics;
pub mod numeric;
pub mod partition;
pub mod rng;
pub mod samplers;
pub mod smoothing;
pub mod types;

pub use aggregation::{
    aggregate, aggregate_weights, one_stage_aggregate, pairwise_aggregate, resample, tree_density, Aggregation,
    AggregationConfig, Strategy,
};
pub use baselines::{average_aggregate, parametric_aggregate, parametric_fit, weighted_aggregate};
pub use error::{Error, Result};
pub use gaussian::Gaussian;
pub use partition::{build_tree, BoundsPolicy, CutRule, DimensionOrder, PartitionConfig};
pub use rng::derive_seed;
pub use smoothing::{build_ensemble, LocalGaussianConfig, Smoothing};
pub use types::{AggregatedDensity, Block, BlockDist, Density1d, DrawMatrix, Ensemble, Leaf, SampleSet, TreeNode};
