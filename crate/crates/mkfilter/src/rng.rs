//! Deterministic substream derivation.
//!
//! Every randomized routine in this crate draws from a [`ChaCha8Rng`] whose
//! 64-bit seed is derived from a user seed plus a list of integer tags
//! (replicate number, feature index, ...) through the splitmix64 finalizer.
//! Both ChaCha and splitmix64 are fully specified integer algorithms, so the
//! same `(seed, tags)` pair produces the same stream on every platform and
//! thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer (Steele, Lea, Flood 2014).
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a tag path.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut x = mix(seed ^ 0x243F_6A88_85A3_08D3);
    for (i, &t) in tags.iter().enumerate() {
        x = mix(x ^ t.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(i as u64 + 1)));
    }
    x
}

/// A ChaCha8 generator positioned at the start of the substream named by
/// `(seed, tags)`.
pub fn substream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tags))
}
