//! Domain types shared by the partitioning, aggregation, and evaluation code.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gaussian::Gaussian;
use crate::numeric::{simpson, std_normal_cdf};

/// Posterior draws from one subset chain, stored row-major (`n` rows of `p`).
#[derive(Debug, Clone, PartialEq)]
pub struct DrawMatrix {
    data: Vec<f64>,
    n: usize,
    p: usize,
    subset_id: usize,
}

impl DrawMatrix {
    pub fn new(data: Vec<f64>, p: usize, subset_id: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInput("draw dimension must be at least 1".into()));
        }
        if data.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !data.len().is_multiple_of(p) {
            return Err(Error::InvalidInput(format!(
                "{} values do not form rows of width {p}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("draw {} coordinate {}", pos / p, pos % p)));
        }
        let n = data.len() / p;
        Ok(Self { data, n, p, subset_id })
    }

    pub fn from_rows(rows: &[Vec<f64>], subset_id: usize) -> Result<Self> {
        let p = rows.first().ok_or(Error::EmptyInput)?.len();
        let mut data = Vec::with_capacity(rows.len() * p);
        for r in rows {
            if r.len() != p {
                return Err(Error::DimensionMismatch { expected: p, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(data, p, subset_id)
    }

    /// Single-column matrix from scalar draws.
    pub fn from_scalars(values: Vec<f64>, subset_id: usize) -> Result<Self> {
        Self::new(values, 1, subset_id)
    }

    pub fn n_draws(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn subset_id(&self) -> usize {
        self.subset_id
    }

    pub fn with_subset_id(mut self, subset_id: usize) -> Self {
        self.subset_id = subset_id;
        self
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.p)
    }

    pub fn column(&self, q: usize) -> Vec<f64> {
        self.rows().map(|r| r[q]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.p];
        for r in self.rows() {
            for (a, v) in acc.iter_mut().zip(r) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= self.n as f64);
        acc
    }
}

/// The `m` subset draw matrices handed to an aggregator.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    subsets: Vec<DrawMatrix>,
}

impl SampleSet {
    pub fn new(subsets: Vec<DrawMatrix>) -> Result<Self> {
        let p = subsets.first().ok_or(Error::EmptyInput)?.dim();
        if let Some(bad) = subsets.iter().find(|s| s.dim() != p) {
            return Err(Error::DimensionMismatch { expected: p, found: bad.dim() });
        }
        Ok(Self { subsets })
    }

    pub fn m(&self) -> usize {
        self.subsets.len()
    }

    pub fn dim(&self) -> usize {
        self.subsets[0].dim()
    }

    pub fn subsets(&self) -> &[DrawMatrix] {
        &self.subsets
    }

    pub fn into_subsets(self) -> Vec<DrawMatrix> {
        self.subsets
    }

    /// Per-subset draw counts `N_i`.
    pub fn totals(&self) -> Vec<usize> {
        self.subsets.iter().map(DrawMatrix::n_draws).collect()
    }

    /// Coordinate-wise minimum and maximum over all draws of all subsets.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let p = self.dim();
        let mut lo = vec![f64::INFINITY; p];
        let mut hi = vec![f64::NEG_INFINITY; p];
        for s in &self.subsets {
            for r in s.rows() {
                for q in 0..p {
                    lo[q] = lo[q].min(r[q]);
                    hi[q] = hi[q].max(r[q]);
                }
            }
        }
        (lo, hi)
    }
}

/// Axis-aligned half-open rectangle `(L_1, R_1] x ... x (L_p, R_p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Block {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), found: upper.len() });
        }
        if lower.is_empty() {
            return Err(Error::InvalidInput("block must have at least one dimension".into()));
        }
        for (q, (l, r)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !r.is_finite() {
                return Err(Error::NonFinite(format!("block edge in dimension {q}")));
            }
            if !(l < r) {
                return Err(Error::InvalidInput(format!(
                    "block edge {q} is empty: ({l}, {r}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn edge(&self, q: usize) -> f64 {
        self.upper[q] - self.lower[q]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|q| self.edge(q)).product()
    }

    /// Sum of log edge lengths; stays finite for deep blocks whose volume
    /// would underflow.
    pub fn log_volume(&self) -> f64 {
        (0..self.dim()).map(|q| self.edge(q).ln()).sum()
    }

    /// Half-open membership: `L_q < x_q <= R_q` for every `q`.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, r))| l < v && v <= r))
    }

    /// Split along `q` at `cut` into `(L_q, cut]` and `(cut, R_q]`.
    pub fn split(&self, q: usize, cut: f64) -> (Block, Block) {
        debug_assert!(self.lower[q] < cut && cut < self.upper[q]);
        let mut left_upper = self.upper.clone();
        left_upper[q] = cut;
        let mut right_lower = self.lower.clone();
        right_lower[q] = cut;
        (
            Block { lower: self.lower.clone(), upper: left_upper },
            Block { lower: right_lower, upper: self.upper.clone() },
        )
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, r)| 0.5 * (l + r)).collect()
    }

    /// Uniform draw inside the block.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, r)| {
                // 1 - u lies in (0, 1], matching the half-open edge.
                let u: f64 = 1.0 - rng.random::<f64>();
                (l + u * (r - l)).min(*r)
            })
            .collect()
    }
}

/// A leaf of a partition tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub block: Block,
    /// Number of draws of each subset inside the block.
    pub counts: Vec<usize>,
    /// Row indices of each subset's draws inside the block.
    pub members: Vec<Vec<usize>>,
}

/// Binary partition tree. Internal nodes send `x[dim] <= cut` left.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        dim: usize,
        cut: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf(Leaf),
}

impl TreeNode {
    pub fn num_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 1,
            TreeNode::Internal { left, right, .. } => left.num_leaves() + right.num_leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Leaf reached by routing `x` down the cuts.
    pub fn locate(&self, x: &[f64]) -> &Leaf {
        match self {
            TreeNode::Leaf(leaf) => leaf,
            TreeNode::Internal { dim, cut, left, right } => {
                if x[*dim] <= *cut {
                    left.locate(x)
                } else {
                    right.locate(x)
                }
            }
        }
    }
}

/// Within-block distribution of an aggregated density.
#[derive(Debug, Clone)]
pub enum BlockDist {
    Uniform,
    Gaussian(Gaussian),
}

/// K-block mixture `sum_k w_k g_k` produced by aggregating subset histograms.
#[derive(Debug, Clone)]
pub struct AggregatedDensity {
    blocks: Vec<Block>,
    weights: Vec<f64>,
    dists: Vec<BlockDist>,
    index: WeightedIndex<f64>,
}

impl AggregatedDensity {
    pub fn new(blocks: Vec<Block>, weights: Vec<f64>, dists: Vec<BlockDist>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::EmptyInput);
        }
        if weights.len() != blocks.len() {
            return Err(Error::DimensionMismatch { expected: blocks.len(), found: weights.len() });
        }
        if dists.len() != blocks.len() {
            return Err(Error::DimensionMismatch { expected: blocks.len(), found: dists.len() });
        }
        let p = blocks[0].dim();
        if let Some(b) = blocks.iter().find(|b| b.dim() != p) {
            return Err(Error::DimensionMismatch { expected: p, found: b.dim() });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("weights sum to {total}, not 1")));
        }
        let index = WeightedIndex::new(&weights).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(Self { blocks, weights, dists, index })
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].dim()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dists(&self) -> &[BlockDist] {
        &self.dists
    }

    /// Draw a block index according to the weights.
    pub fn sample_block<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }

    pub fn sample_in_block<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<f64> {
        match &self.dists[k] {
            BlockDist::Uniform => self.blocks[k].sample_uniform(rng),
            BlockDist::Gaussian(g) => g.sample(rng),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let k = self.sample_block(rng);
        self.sample_in_block(k, rng)
    }

    /// Density at `x`. Uniform blocks use half-open membership; Gaussian
    /// blocks are not truncated.
    pub fn pdf(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .zip(&self.weights)
            .zip(&self.dists)
            .map(|((b, w), d)| match d {
                BlockDist::Uniform => {
                    if b.contains(x).unwrap_or(false) {
                        w / b.volume()
                    } else {
                        0.0
                    }
                }
                BlockDist::Gaussian(g) => w * g.log_pdf(x).exp(),
            })
            .sum()
    }

    /// Exact probability of `(lo, hi]` for a one-dimensional density.
    pub fn mass_1d(&self, lo: f64, hi: f64) -> f64 {
        assert_eq!(self.dim(), 1, "mass_1d needs a one-dimensional density");
        self.blocks
            .iter()
            .zip(&self.weights)
            .zip(&self.dists)
            .map(|((b, w), d)| match d {
                BlockDist::Uniform => {
                    let (l, r) = (b.lower()[0], b.upper()[0]);
                    let overlap = (hi.min(r) - lo.max(l)).max(0.0);
                    w * overlap / (r - l)
                }
                BlockDist::Gaussian(g) => {
                    let sd = g.cov()[(0, 0)].sqrt();
                    let mu = g.mean()[0];
                    w * (std_normal_cdf((hi - mu) / sd) - std_normal_cdf((lo - mu) / sd))
                }
            })
            .sum()
    }
}

/// Uniform mixture of `T` aggregated densities built from independent trees.
#[derive(Debug, Clone)]
pub struct Ensemble {
    members: Vec<AggregatedDensity>,
    seeds: Vec<u64>,
}

impl Ensemble {
    pub fn new(members: Vec<AggregatedDensity>, seeds: Vec<u64>) -> Result<Self> {
        let p = members.first().ok_or(Error::EmptyInput)?.dim();
        if seeds.len() != members.len() {
            return Err(Error::DimensionMismatch { expected: members.len(), found: seeds.len() });
        }
        if let Some(m) = members.iter().find(|m| m.dim() != p) {
            return Err(Error::DimensionMismatch { expected: p, found: m.dim() });
        }
        Ok(Self { members, seeds })
    }

    pub fn single(member: AggregatedDensity, seed: u64) -> Self {
        Self { members: vec![member], seeds: vec![seed] }
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[AggregatedDensity] {
        &self.members
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let t = rng.random_range(0..self.members.len());
        self.members[t].sample(rng)
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        self.members.iter().map(|m| m.pdf(x)).sum::<f64>() / self.members.len() as f64
    }

    pub fn mass_1d(&self, lo: f64, hi: f64) -> f64 {
        self.members.iter().map(|m| m.mass_1d(lo, hi)).sum::<f64>() / self.members.len() as f64
    }
}

/// A one-dimensional density that can be integrated over bins.
pub trait Density1d {
    fn pdf(&self, x: f64) -> f64;

    /// Probability of `(lo, hi]`. Defaults to Simpson quadrature.
    fn mass(&self, lo: f64, hi: f64) -> f64 {
        simpson(|x| self.pdf(x), lo, hi, 64)
    }
}

impl Density1d for AggregatedDensity {
    fn pdf(&self, x: f64) -> f64 {
        AggregatedDensity::pdf(self, &[x])
    }

    fn mass(&self, lo: f64, hi: f64) -> f64 {
        self.mass_1d(lo, hi)
    }
}

impl Density1d for Ensemble {
    fn pdf(&self, x: f64) -> f64 {
        Ensemble::pdf(self, &[x])
    }

    fn mass(&self, lo: f64, hi: f64) -> f64 {
        self.mass_1d(lo, hi)
    }
}
