//! Seed derivation. Every random stream in the crate is a
//! `Xoshiro256PlusPlus` keyed by a seed derived from the master seed and a
//! job index, so results do not depend on scheduling.

use rand::SeedableRng;
pub use rand_xoshiro::Xoshiro256PlusPlus as Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed number `index` of `master`.
#[inline]
pub fn derive(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

#[inline]
pub fn stream(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
