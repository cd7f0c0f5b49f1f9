//! Seed derivation.
//!
//! Every random component takes a `u64` seed. Child seeds are derived with a
//! SplitMix64 finalizer so that a tree node, an ensemble member, or a pair in
//! a pairwise stage gets the same stream no matter which thread builds it or
//! in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PartRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent child seed from `seed` and a stream label.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(stream.wrapping_add(0x6A09_E667_F3BC_C909)))
}

pub fn rng_from_seed(seed: u64) -> PartRng {
    PartRng::seed_from_u64(seed)
}

// Stream labels used across the crate.
pub(crate) const STREAM_RESAMPLE: u64 = 0x5245_5341_4D50;
pub(crate) const STREAM_MEMBER: u64 = 0x4D45_4D42_0000;
pub(crate) const STREAM_STAGE: u64 = 0x5354_4147_0000;
