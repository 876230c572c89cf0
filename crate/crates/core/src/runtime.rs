//! Seed derivation and the bounded worker pool used for replicated runs.

use rayon::ThreadPool;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "PRIORBENCH_THREADS";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for stream `index` under `master`: `splitmix64(splitmix64(master) ^ index)`.
///
/// The derivation is part of the reproducibility contract and does not change
/// between versions.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

/// Runs `f` on a pool sized by `PRIORBENCH_THREADS` (all cores when unset).
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0);
    match threads.and_then(build_pool) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

fn build_pool(threads: usize) -> Option<ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().ok()
}
