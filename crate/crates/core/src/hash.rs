//! Stable, platform-independent hashing used for seeding and feature hashing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    fnv1a_extend(FNV_OFFSET, bytes)
}

pub fn fnv1a_extend(mut state: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        state ^= u64::from(b);
        state = state.wrapping_mul(FNV_PRIME);
    }
    state
}

/// SplitMix64 finalizer. Spreads low-entropy inputs over all 64 bits.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a sub-seed from a run seed and a string key (speaker id, segment id, ...).
pub fn keyed_seed(seed: u64, domain: &str, key: &str) -> u64 {
    let mut h = fnv1a_extend(FNV_OFFSET, &seed.to_le_bytes());
    h = fnv1a_extend(h, domain.as_bytes());
    h = fnv1a_extend(h, &[0xff]);
    h = fnv1a_extend(h, key.as_bytes());
    mix64(h)
}

pub fn rng_for(seed: u64, domain: &str, key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(keyed_seed(seed, domain, key))
}

/// Uniform draw in `[0, 1)` from a hash value.
pub fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn keyed_seed_separates_domains() {
        assert_ne!(keyed_seed(7, "mix", "spk1"), keyed_seed(7, "trial", "spk1"));
        assert_ne!(keyed_seed(7, "mix", "spk1"), keyed_seed(8, "mix", "spk1"));
        assert_eq!(keyed_seed(7, "mix", "spk1"), keyed_seed(7, "mix", "spk1"));
    }
}
