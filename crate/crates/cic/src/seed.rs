//! Per-task seed derivation.

/// Human-readable form of [`pair_seed`], echoed into provenance files.
pub const PAIR_SEED_FORMULA: &str = "splitmix64(seed ^ splitmix64((i << 32) | j))";

/// One step of the SplitMix64 generator, used as a 64-bit mixer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of task `(i, j)` under master seed `seed`.
pub fn pair_seed(seed: u64, i: usize, j: usize) -> u64 {
    splitmix64(seed ^ splitmix64(((i as u64) << 32) | j as u64))
}
