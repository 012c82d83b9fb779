//! Counter-based seed derivation.
//!
//! Every replicate or chunk of a Monte Carlo run draws from its own
//! generator, seeded by `derive(master, index)`. The stream assigned to an
//! index therefore never depends on scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for work item `index` under `master`:
/// `splitmix64(master ^ splitmix64(index))`.
pub fn derive(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sub_rng(master: u64, index: u64) -> ChaCha8Rng {
    rng(derive(master, index))
}
