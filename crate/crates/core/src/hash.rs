//! Seeded hashes used across the crate. All are stable across runs and
//! platforms so persisted sketches and samples stay comparable.

use xxhash_rust::xxh3::{xxh3_128_with_seed, xxh3_64_with_seed};

/// Seed for column sketches.
pub const SKETCH_SEED: u64 = 0x0000_5eed_0f0c_0101;
/// Seed for consistent join sampling.
pub const SAMPLE_SEED: u64 = 0x0005_a3b1_e5ee_d000;
/// Key for 4C cell hashes.
pub const CELL_SEED: u64 = 0x0000_004c_ce11_0000;

pub fn hash64(seed: u64, bytes: &[u8]) -> u64 {
    xxh3_64_with_seed(bytes, seed)
}

pub fn hash128(seed: u64, bytes: &[u8]) -> u128 {
    xxh3_128_with_seed(bytes, seed)
}
