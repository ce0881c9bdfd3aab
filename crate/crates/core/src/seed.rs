//! Deterministic seed derivation.
//!
//! Every source of randomness in the toolkit is a [`ChaCha8Rng`] seeded from
//! one base seed plus a purpose tag, so a whole run is reproducible from a
//! single number and independent stages never share a stream. The derivation
//! is a fixed FNV-1a / SplitMix64 combination rather than the standard
//! library hasher, whose output may change between compiler releases.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Derive a child seed from a base seed and a purpose tag.
///
/// Equal inputs always give equal outputs; distinct tags give well-mixed,
/// effectively independent seeds.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for byte in tag.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(base ^ h)
}

/// Build the generator used everywhere randomness is needed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_inputs_same_seed() {
        assert_eq!(derive_seed(7, "train"), derive_seed(7, "train"));
    }

    #[test]
    fn distinct_tags_differ() {
        let a = derive_seed(7, "train");
        let b = derive_seed(7, "split");
        let c = derive_seed(8, "train");
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(b, c);
    }

    #[test]
    fn rng_streams_are_reproducible() {
        let mut a = seeded_rng(derive_seed(42, "check"));
        let mut b = seeded_rng(derive_seed(42, "check"));
        for _ in 0..32 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }

    #[test]
    fn derivation_is_stable_across_builds() {
        // Frozen reference values (computed once from the FNV-1a/SplitMix64
        // definition); a change here would silently break every recorded run.
        assert_eq!(derive_seed(0, "train"), 0x33f9_4cfb_5ea2_3761);
        assert_eq!(derive_seed(7, "split"), 0xb67c_0143_3a2e_b41c);
    }
}
