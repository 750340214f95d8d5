//! Deterministic seed derivation.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] seeded by a
//! `u64`. Independent streams (truth, observation locations, noise, trial
//! index) are derived from one master seed with [`derive_seed`], a SplitMix64
//! finaliser over the master seed and the stream labels. Streams with distinct
//! labels are statistically independent; the mapping is stable across
//! platforms and thread counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `labels` from `master`.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(mix(master.wrapping_add(GOLDEN_GAMMA)), |acc, &l| {
            mix(acc ^ mix(l.wrapping_add(GOLDEN_GAMMA).wrapping_mul(GOLDEN_GAMMA)))
        })
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream labels used by the experiment harness.
pub mod stream {
    pub const TRUTH: u64 = 1;
    pub const LOCATIONS: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const TRIAL: u64 = 4;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable_and_label_sensitive() {
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(8, &[1]));
        assert_ne!(derive_seed(7, &[]), derive_seed(7, &[0]));
    }
}
