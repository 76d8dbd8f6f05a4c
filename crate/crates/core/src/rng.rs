//! Seeded random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for stream `i` of a run seeded with `seed`.
pub fn stream(seed: u64, i: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(i))
}

/// Worker threads: `SPARSE_LDP_THREADS` if set, else the available parallelism.
pub fn default_threads() -> usize {
    std::env::var("SPARSE_LDP_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
