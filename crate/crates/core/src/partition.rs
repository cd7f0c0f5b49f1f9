//! Random partition trees over pooled subset draws.
//!
//! A tree recursively bisects the bounding block of all draws. At each node a
//! dimension is drawn at random (without replacement among the dimensions
//! not yet rejected at that node) and a cut point is proposed by the
//! configured rule:
//!
//! * [`CutRule::Kd`] cuts at the lower median of the pooled values,
//! * [`CutRule::Ml`] cuts where the two-block histogram likelihood, summed
//!   over subsets, is largest.
//!
//! A cut is accepted when both halves are wider than the minimum edge length
//! and every subset keeps more than `N_i * delta_rho` draws on each side.
//! When no dimension yields an acceptable cut the node becomes a leaf.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::types::{Block, DrawMatrix, Leaf, SampleSet, TreeNode};

/// How a node proposes its cut point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutRule {
    /// Maximum empirical likelihood of the resulting two-block histogram.
    Ml,
    /// Lower median of the pooled draws.
    Kd,
}

/// Where the root block comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundsPolicy {
    /// Coordinate-wise sample minimum and maximum of all draws.
    FromSamples,
    Explicit { lower: Vec<f64>, upper: Vec<f64> },
}

/// Order in which a node tries dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DimensionOrder {
    /// Uniformly at random without replacement, seeded per node.
    #[default]
    Random,
    /// Fixed cycle starting at `depth mod p`. Used to compare against the
    /// predetermined order assumed by consistency arguments.
    RoundRobin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionConfig {
    pub rule: CutRule,
    /// Minimum per-subset occupancy fraction of each side of a cut.
    pub delta_rho: f64,
    /// Minimum edge length of a block.
    pub delta_a: f64,
    /// Per-dimension override for `delta_a`.
    pub delta_a_per_dim: Option<Vec<f64>>,
    pub seed: u64,
    pub bounds: BoundsPolicy,
    pub dimension_order: DimensionOrder,
}

impl PartitionConfig {
    pub const DEFAULT_DELTA_RHO: f64 = 0.001;
    pub const DEFAULT_DELTA_A: f64 = 0.0001;

    pub fn new(rule: CutRule) -> Self {
        Self {
            rule,
            delta_rho: Self::DEFAULT_DELTA_RHO,
            delta_a: Self::DEFAULT_DELTA_A,
            delta_a_per_dim: None,
            seed: 0,
            bounds: BoundsPolicy::FromSamples,
            dimension_order: DimensionOrder::Random,
        }
    }

    pub fn with_delta_rho(mut self, delta_rho: f64) -> Self {
        self.delta_rho = delta_rho;
        self
    }

    pub fn with_delta_a(mut self, delta_a: f64) -> Self {
        self.delta_a = delta_a;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_bounds(mut self, bounds: BoundsPolicy) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_dimension_order(mut self, order: DimensionOrder) -> Self {
        self.dimension_order = order;
        self
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if !(self.delta_rho > 0.0 && self.delta_rho < 0.5) {
            return Err(Error::InvalidInput(format!(
                "delta_rho must lie in (0, 0.5), got {}",
                self.delta_rho
            )));
        }
        if !(self.delta_a > 0.0 && self.delta_a.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "delta_a must be positive, got {}",
                self.delta_a
            )));
        }
        if let Some(per_dim) = &self.delta_a_per_dim {
            if per_dim.len() != p {
                return Err(Error::DimensionMismatch { expected: p, found: per_dim.len() });
            }
            if per_dim.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                return Err(Error::InvalidInput("per-dimension delta_a must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn min_edge(&self, q: usize) -> f64 {
        self.delta_a_per_dim.as_ref().map_or(self.delta_a, |v| v[q])
    }
}

/// Lower median (rank `ceil(n/2)`) by expected linear-time selection.
pub fn median_cut(values: &[f64]) -> Result<f64> {
    let mut buf = values.to_vec();
    lower_median_in_place(&mut buf)
}

fn lower_median_in_place(values: &mut [f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable_by(k, f64::total_cmp);
    Ok(*m)
}

fn side_term(n_side: usize, n: usize, volume: f64) -> f64 {
    if n_side == 0 {
        return 0.0;
    }
    let n_side = n_side as f64;
    n_side * (n_side / (n as f64 * volume)).ln()
}

/// Log-likelihood of splitting each subset's values at `cut`, given the
/// per-subset left counts.
fn ml_score(left: &[usize], totals: &[usize], a1: f64, a2: f64) -> f64 {
    left.iter()
        .zip(totals)
        .map(|(&l, &n)| side_term(l, n, a1) + side_term(n - l, n, a2))
        .sum()
}

/// Maximum-likelihood cut along one dimension.
///
/// `values_per_subset[i]` holds subset `i`'s coordinates inside the block's
/// interval `(lo, hi]`; `other_volume` is the product of the block's other
/// edge lengths. Returns `(cut, score)` for the best candidate among the
/// observed values; ties go to the smallest value.
pub fn ml_cut<V: AsRef<[f64]>>(
    values_per_subset: &[V],
    interval: (f64, f64),
    other_volume: f64,
) -> Result<(f64, f64)> {
    ml_cut_with_margin(values_per_subset, interval, other_volume, 0.0)
}

/// As [`ml_cut`], but only candidates strictly inside
/// `(lo + margin, hi - margin)` are considered.
pub fn ml_cut_with_margin<V: AsRef<[f64]>>(
    values_per_subset: &[V],
    interval: (f64, f64),
    other_volume: f64,
    margin: f64,
) -> Result<(f64, f64)> {
    if values_per_subset.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (lo, hi) = interval;
    if !(lo < hi) || !(other_volume > 0.0) {
        return Err(Error::InvalidInput("ml_cut needs a nonempty interval and positive volume".into()));
    }
    let totals: Vec<usize> = values_per_subset.iter().map(|v| v.as_ref().len()).collect();
    if totals.contains(&0) {
        return Err(Error::EmptyInput);
    }
    let mut tagged: Vec<(f64, usize)> = values_per_subset
        .iter()
        .enumerate()
        .flat_map(|(i, v)| v.as_ref().iter().map(move |&x| (x, i)))
        .collect();
    if tagged.iter().any(|(x, _)| !x.is_finite()) {
        return Err(Error::NonFinite("ml_cut input".into()));
    }
    tagged.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    let mut left = vec![0usize; totals.len()];
    let mut best: Option<(f64, f64)> = None;
    let mut i = 0;
    while i < tagged.len() {
        let c = tagged[i].0;
        while i < tagged.len() && tagged[i].0 == c {
            left[tagged[i].1] += 1;
            i += 1;
        }
        if !(c > lo + margin && c < hi - margin) {
            continue;
        }
        if left.iter().zip(&totals).any(|(&l, &n)| l == 0 || l == n) {
            continue;
        }
        let score = ml_score(&left, &totals, other_volume * (c - lo), other_volume * (hi - c));
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((c, score));
        }
    }
    best.ok_or(Error::NoValidCut)
}

/// Grow a partition tree over all subsets of `samples`.
pub fn build_tree(samples: &SampleSet, cfg: &PartitionConfig) -> Result<TreeNode> {
    let p = samples.dim();
    cfg.validate(p)?;
    let root = root_block(samples, cfg)?;
    let builder = Builder {
        subsets: samples.subsets(),
        cfg,
        thresholds: samples
            .totals()
            .iter()
            .map(|&n| n as f64 * cfg.delta_rho)
            .collect(),
    };
    let members = samples.subsets().iter().map(|s| (0..s.n_draws()).collect()).collect();
    Ok(builder.grow(root, members, derive_seed(cfg.seed, 0), 0))
}

fn root_block(samples: &SampleSet, cfg: &PartitionConfig) -> Result<Block> {
    match &cfg.bounds {
        BoundsPolicy::FromSamples => {
            let (mut lo, mut hi) = samples.bounds();
            for q in 0..lo.len() {
                if hi[q] <= lo[q] {
                    // All draws share this coordinate; widen so the block has volume.
                    let pad = cfg.min_edge(q).max(1e-9 * (1.0 + lo[q].abs()));
                    lo[q] -= pad;
                    hi[q] += pad;
                }
            }
            Block::new(lo, hi)
        }
        BoundsPolicy::Explicit { lower, upper } => {
            let block = Block::new(lower.clone(), upper.clone())?;
            if block.dim() != samples.dim() {
                return Err(Error::DimensionMismatch { expected: samples.dim(), found: block.dim() });
            }
            let (lo, hi) = samples.bounds();
            for q in 0..lo.len() {
                if lo[q] < lower[q] || hi[q] > upper[q] {
                    return Err(Error::InvalidInput(format!(
                        "explicit bounds do not enclose the draws in dimension {q}"
                    )));
                }
            }
            Ok(block)
        }
    }
}

/// Nodes holding more draws than this grow their two children in parallel.
const PARALLEL_GROW_THRESHOLD: usize = 20_000;

struct Builder<'a> {
    subsets: &'a [DrawMatrix],
    cfg: &'a PartitionConfig,
    thresholds: Vec<f64>,
}

impl Builder<'_> {
    fn grow(&self, block: Block, members: Vec<Vec<usize>>, seed: u64, depth: usize) -> TreeNode {
        let p = block.dim();
        let mut rng = rng_from_seed(seed);
        let mut candidates: Vec<usize> = match self.cfg.dimension_order {
            DimensionOrder::Random => (0..p).collect(),
            DimensionOrder::RoundRobin => (0..p).map(|k| (depth + k) % p).collect(),
        };

        while !candidates.is_empty() {
            let idx = match self.cfg.dimension_order {
                DimensionOrder::Random => rng.random_range(0..candidates.len()),
                DimensionOrder::RoundRobin => 0,
            };
            let q = candidates[idx];
            if let Some(cut) = self.propose(&block, &members, q) {
                if let Some((left_members, right_members)) = self.try_split(&block, &members, q, cut) {
                    let (left_block, right_block) = block.split(q, cut);
                    let (ls, rs) = (derive_seed(seed, 1), derive_seed(seed, 2));
                    let total: usize = members.iter().map(Vec::len).sum();
                    let (left, right) = if total > PARALLEL_GROW_THRESHOLD {
                        rayon::join(
                            || self.grow(left_block, left_members, ls, depth + 1),
                            || self.grow(right_block, right_members, rs, depth + 1),
                        )
                    } else {
                        (
                            self.grow(left_block, left_members, ls, depth + 1),
                            self.grow(right_block, right_members, rs, depth + 1),
                        )
                    };
                    return TreeNode::Internal {
                        dim: q,
                        cut,
                        left: Box::new(left),
                        right: Box::new(right),
                    };
                }
            }
            candidates.remove(idx);
        }

        TreeNode::Leaf(Leaf {
            block,
            counts: members.iter().map(Vec::len).collect(),
            members,
        })
    }

    fn propose(&self, block: &Block, members: &[Vec<usize>], q: usize) -> Option<f64> {
        match self.cfg.rule {
            CutRule::Kd => {
                let mut pooled: Vec<f64> = self
                    .subsets
                    .iter()
                    .zip(members)
                    .flat_map(|(s, idx)| idx.iter().map(move |&j| s.row(j)[q]))
                    .collect();
                lower_median_in_place(&mut pooled).ok()
            }
            CutRule::Ml => {
                let values: Vec<Vec<f64>> = self
                    .subsets
                    .iter()
                    .zip(members)
                    .map(|(s, idx)| idx.iter().map(|&j| s.row(j)[q]).collect())
                    .collect();
                // The other edges only add a cut-independent constant to the score.
                ml_cut_with_margin(
                    &values,
                    (block.lower()[q], block.upper()[q]),
                    1.0,
                    self.cfg.min_edge(q),
                )
                .ok()
                .map(|(cut, _)| cut)
            }
        }
    }

    fn try_split(
        &self,
        block: &Block,
        members: &[Vec<usize>],
        q: usize,
        cut: f64,
    ) -> Option<(Vec<Vec<usize>>, Vec<Vec<usize>>)> {
        let min_edge = self.cfg.min_edge(q);
        if !(cut - block.lower()[q] > min_edge && block.upper()[q] - cut > min_edge) {
            return None;
        }
        let mut lefts = Vec::with_capacity(members.len());
        let mut rights = Vec::with_capacity(members.len());
        for ((s, idx), &threshold) in self.subsets.iter().zip(members).zip(&self.thresholds) {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&j| s.row(j)[q] <= cut);
            if !(l.len().min(r.len()) as f64 > threshold) {
                return None;
            }
            lefts.push(l);
            rights.push(r);
        }
        Some((lefts, rights))
    }
}

/// Leaves of `tree` in left-to-right order.
pub fn leaves(tree: &TreeNode) -> Vec<&Leaf> {
    fn walk<'t>(node: &'t TreeNode, out: &mut Vec<&'t Leaf>) {
        match node {
            TreeNode::Leaf(leaf) => out.push(leaf),
            TreeNode::Internal { left, right, .. } => {
                walk(left, out);
                walk(right, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(tree, &mut out);
    out
}

/// Blocks and per-subset counts of every leaf, in left-to-right order.
pub fn collect_leaves(tree: &TreeNode) -> (Vec<Block>, Vec<Vec<usize>>) {
    leaves(tree)
        .into_iter()
        .map(|leaf| (leaf.block.clone(), leaf.counts.clone()))
        .unzip()
}
