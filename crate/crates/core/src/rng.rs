//! Seed derivation.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by
//! `(seed, domain)` and selected by an index, so a draw depends only on its
//! own coordinates and never on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains. Distinct domains never share key material.
pub mod domain {
    pub const ENSEMBLE: u64 = 0x656e_7365_6d62_6c65;
    pub const NOISE: u64 = 0x6e6f_6973_6500_0001;
    pub const X_SAMPLER: u64 = 0x7873_616d_706c_6572;
    pub const LEMMA22: u64 = 0x6c65_6d6d_6132_3200;
    pub const XI: u64 = 0x7869_0000_0000_0002;
    pub const SIGNAL: u64 = 0x7369_676e_616c_0003;
    pub const SOLVER: u64 = 0x736f_6c76_6572_0004;
    pub const TRIAL: u64 = 0x7472_6961_6c00_0005;
    pub const DECOMPOSE: u64 = 0x6465_636f_6d70_0006;
    pub const PAIRS: u64 = 0x7061_6972_7300_0007;
}

/// RNG for the `index`-th item of `domain` under `seed`.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// SplitMix64 finalizer; used to derive child seeds from a parent seed.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `(seed, domain, index)`.
pub fn subseed(seed: u64, domain: u64, index: u64) -> u64 {
    mix(mix(seed ^ domain.rotate_left(17)) ^ index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, domain::ENSEMBLE, 3).random();
        let b: u64 = stream(7, domain::ENSEMBLE, 3).random();
        let c: u64 = stream(7, domain::ENSEMBLE, 4).random();
        let d: u64 = stream(7, domain::NOISE, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn subseeds_differ_by_index() {
        assert_ne!(subseed(1, domain::TRIAL, 0), subseed(1, domain::TRIAL, 1));
        assert_eq!(subseed(1, domain::TRIAL, 5), subseed(1, domain::TRIAL, 5));
    }
}
