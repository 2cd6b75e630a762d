//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! seeded from a master seed mixed with a stream index, so parallel work is
//! independent of scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer applied to `master ^ golden * (index + 1)`.
pub fn mix(master: u64, index: u64) -> u64 {
    let mut z = master ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream tags so that different consumers of one seed never share a stream.
pub mod stream {
    pub const LAYER1_INIT: u64 = 0x4c31;
    pub const LAYER2_INIT: u64 = 0x4c32;
    pub const KMEANS: u64 = 0x4b4d;
    pub const KRYLOV: u64 = 0x4b52;
    pub const SHAPES: u64 = 0x5348;
    pub const COMPOSE: u64 = 0x434d;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixing_separates_nearby_inputs() {
        let a = mix(7, 0);
        assert_ne!(a, mix(7, 1));
        assert_ne!(a, mix(8, 0));
        assert_eq!(a, mix(7, 0));
    }
}
