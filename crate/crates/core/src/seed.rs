//! Splittable seed scheme: every stochastic stage draws its stream from the
//! single run seed mixed with a stage tag.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Child seed for a named stage.
pub fn derive(seed: u64, tag: &str) -> u64 {
    splitmix64(seed ^ splitmix64(fnv1a(tag)))
}

/// Child seed for the `index`-th member of a family (trees, folds, ...).
pub fn derive_indexed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(index.wrapping_add(1))))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_seeds_differ() {
        assert_ne!(derive(7, "split"), derive(7, "undersample"));
        assert_eq!(derive(7, "split"), derive(7, "split"));
        assert_ne!(derive_indexed(7, 0), derive_indexed(7, 1));
    }
}
