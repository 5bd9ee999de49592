//! Seeded, scheduling-independent Monte Carlo plumbing.
//!
//! Trials are cut into fixed-size blocks. Block `b` of a computation tagged
//! `tag` draws from ChaCha stream `(tag << 40) | b` of the master seed, so the
//! random numbers consumed by a trial depend only on `(seed, tag, trial)` and
//! never on how rayon schedules the blocks. Per-block results are returned in
//! block order and the caller folds them sequentially, which keeps floating
//! point sums bit-identical across thread counts.

use std::ops::Range;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// The RNG used everywhere in the crate.
pub type Rng = ChaCha8Rng;

/// Trials per block.
pub const BLOCK_SIZE: u64 = 512;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "MONSTERLAB_THREADS";

/// Stream tags. Distinct computations sharing a master seed use distinct tags.
pub mod tags {
    pub const SINGLE: u32 = 0;
    pub const MU: u32 = 1;
    pub const MU_BAR: u32 = 2;
    pub const EVENT: u32 = 3;
    pub const DRIFT: u32 = 4;
    pub const GP_DECAY: u32 = 5;
    pub const WITNESS: u32 = 6;
    pub const LABEL_EDGE: u32 = 7;
    pub const GRAPH: u32 = 8;
}

/// RNG for block `block` of the computation `tag` under `seed`.
pub fn stream(seed: u64, tag: u32, block: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tag as u64) << 40) | (block & ((1 << 40) - 1)));
    rng
}

/// RNG for one-shot samplers called with a bare seed.
pub fn single(seed: u64) -> Rng {
    stream(seed, tags::SINGLE, 0)
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads =
            std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0).unwrap_or(0);
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("failed to build worker pool")
    })
}

/// Runs `trials` trials in blocks and returns one result per block, in block
/// order. `f` receives the block RNG and the global trial indices it owns.
pub fn run_blocks<A, F>(seed: u64, tag: u32, trials: u64, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(&mut Rng, Range<u64>) -> A + Sync,
{
    let blocks = trials.div_ceil(BLOCK_SIZE);
    pool().install(|| {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream(seed, tag, b);
                let start = b * BLOCK_SIZE;
                let end = (start + BLOCK_SIZE).min(trials);
                f(&mut rng, start..end)
            })
            .collect()
    })
}

/// Counts trials for which `hit` returns true.
pub fn count_hits<F>(seed: u64, tag: u32, trials: u64, hit: F) -> u64
where
    F: Fn(&mut Rng) -> bool + Sync,
{
    run_blocks(seed, tag, trials, |rng, range| range.filter(|_| hit(rng)).count() as u64).into_iter().sum()
}

/// Runs `f` on the crate's worker pool.
pub fn install<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    pool().install(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn blocks_are_ordered_and_cover_trials() {
        let out = run_blocks(7, tags::EVENT, 1300, |_, r| r);
        assert_eq!(out.len(), 3);
        assert_eq!(out[0], 0..512);
        assert_eq!(out[2], 1024..1300);
    }

    #[test]
    fn streams_differ_by_tag_and_block() {
        let a: u64 = stream(1, 1, 0).random();
        let b: u64 = stream(1, 2, 0).random();
        let c: u64 = stream(1, 1, 1).random();
        let a2: u64 = stream(1, 1, 0).random();
        assert_eq!(a, a2);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn count_hits_is_reproducible() {
        let f = |rng: &mut Rng| rng.random::<f64>() < 0.3;
        assert_eq!(count_hits(3, 9, 5000, f), count_hits(3, 9, 5000, f));
    }
}
