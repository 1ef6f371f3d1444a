//! Seed derivation for independent random streams.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream seed for candidate `index` of `generation` under a run seed.
pub fn derive_seed(seed: u64, generation: u64, index: u64) -> u64 {
    mix(mix(mix(seed) ^ generation) ^ index)
}

/// Seed for a named stage of a run (engine, solver, ...).
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    stage.bytes().fold(mix(seed), |h, b| mix(h ^ u64::from(b)))
}
