//! Seed derivation and the single generator used for all sampling.
//!
//! Every random draw in the crate comes from [`PatternRng`] (ChaCha8) seeded
//! through [`rng_for`]. Per-record seeds are derived by hashing, so results do
//! not depend on worker count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type PatternRng = ChaCha8Rng;

/// Stream used when sampling parameters from a seed.
pub const PARAM_STREAM: u64 = 0;
/// Stream used for randomness internal to a pattern application.
pub const APPLY_STREAM: u64 = 1;

pub fn rng_for(seed: u64) -> PatternRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_on_stream(seed: u64, stream: u64) -> PatternRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stable 64-bit seed for `(global_seed, entity_id, index)`.
///
/// SHA-256 over a length-prefixed encoding, truncated to the first eight bytes
/// read little-endian.
pub fn derive_seed(global_seed: u64, entity_id: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(b"patternforge/seed/v1");
    h.update(global_seed.to_le_bytes());
    h.update((entity_id.len() as u64).to_le_bytes());
    h.update(entity_id.as_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn derivation_is_stable() {
        assert_eq!(derive_seed(0, "T0001", 0), derive_seed(0, "T0001", 0));
        assert_ne!(derive_seed(0, "T0001", 0), derive_seed(0, "T0001", 1));
        assert_ne!(derive_seed(1, "T0001", 0), derive_seed(0, "T0001", 0));
    }

    #[test]
    fn no_collisions_over_a_million_derivations() {
        let mut seen = HashSet::with_capacity(1_000_000);
        for g in 0..2u64 {
            for i in 0..500_000u64 {
                assert!(seen.insert(derive_seed(g, "T0001", i)), "collision at g={g} i={i}");
            }
        }
    }

    #[test]
    fn entity_boundaries_are_unambiguous() {
        // length prefix keeps ("ab", 1) and ("a", ...) style inputs apart
        assert_ne!(derive_seed(0, "ab", 0), derive_seed(0, "a", 0));
        assert_ne!(derive_seed(0, "", 0), derive_seed(0, "\0", 0));
    }

    #[test]
    fn streams_differ() {
        use rand::RngCore;
        let mut a = rng_on_stream(5, PARAM_STREAM);
        let mut b = rng_on_stream(5, APPLY_STREAM);
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
