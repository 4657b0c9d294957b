//! Seed derivation and generator construction.
//!
//! Every random stream in the crate is a `ChaCha8Rng` keyed by a 64-bit
//! seed. Child seeds are derived from a parent seed and a list of integer
//! coordinates (cell index, trial index, ...) by folding each coordinate
//! through the SplitMix64 finalizer, so a work item's stream depends only
//! on its coordinates and never on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tag for a cell's fixed evaluation set.
pub const EVAL_STREAM: u64 = 0xE7A1_0000_0000_0001;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `derive_seed(base, &[cell, trial])`. The order of coordinates matters;
/// the order of evaluation does not.
pub fn derive_seed(base: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(base), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
