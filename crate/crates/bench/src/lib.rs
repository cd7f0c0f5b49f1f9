//! Fixtures shared by the benchmarks.

use part_core::rng::rng_from_seed;
use part_core::{DrawMatrix, SampleSet};
use rand_distr::{Distribution, StandardNormal};

/// `m` subsets of `n` standard normal draws in `p` dimensions, subset `i`
/// shifted by `0.1 * i` in every coordinate.
pub fn gaussian_subsets(m: usize, n: usize, p: usize, seed: u64) -> SampleSet {
    let mut rng = rng_from_seed(seed);
    let subsets = (0..m)
        .map(|i| {
            let data: Vec<f64> = (0..n * p)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z + 0.1 * i as f64
                })
                .collect();
            DrawMatrix::new(data, p, i).expect("finite draws")
        })
        .collect();
    SampleSet::new(subsets).expect("equal dimensions")
}
