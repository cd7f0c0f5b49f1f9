//! Synthetic experiment generators and the subset chain sampler.

mod bernoulli;
mod bimodal;
mod logistic;
mod mcmc;

pub use bernoulli::{gen_rare_bernoulli, subset_posterior, BernoulliSpec, BetaTruth};
pub use bimodal::{gen_bimodal, BimodalSpec, BimodalTruth, Mixture2};
pub use logistic::{
    feature_covariance, gen_logistic_data, logistic_log_posterior, logistic_log_posterior_grad,
    LogisticData, LogisticPosterior, LogisticSpec,
};
pub use mcmc::{adaptive_rwm_chain, Chain, RwmConfig};

use rand::seq::SliceRandom;
use rand::Rng;

/// Shuffle `0..n` and cut it into `m` contiguous groups whose sizes differ
/// by at most one.
pub fn random_split<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    chunk_evenly(&idx, m)
}

/// Sort `0..n` by label (stable) and cut into `m` contiguous groups, so
/// each group sees as few distinct labels as possible.
pub fn label_sorted_split(labels: &[bool], m: usize) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    idx.sort_by_key(|&i| labels[i]);
    chunk_evenly(&idx, m)
}

fn chunk_evenly(idx: &[usize], m: usize) -> Vec<Vec<usize>> {
    let n = idx.len();
    let (base, extra) = (n / m, n % m);
    let mut out = Vec::with_capacity(m);
    let mut start = 0;
    for i in 0..m {
        let len = base + usize::from(i < extra);
        out.push(idx[start..start + len].to_vec());
        start += len;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn split_sizes_differ_by_at_most_one() {
        let mut rng = rng_from_seed(0);
        let parts = random_split(10_000, 15, &mut rng);
        let sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 10_000);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all: Vec<usize> = parts.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10_000).collect::<Vec<_>>());
    }

    #[test]
    fn label_sorted_groups_are_homogeneous() {
        let labels: Vec<bool> = (0..100).map(|i| i % 4 == 0).collect();
        let parts = label_sorted_split(&labels, 4);
        assert!(parts[0].iter().all(|&i| !labels[i]));
        assert!(parts[3].iter().all(|&i| labels[i]));
    }
}
