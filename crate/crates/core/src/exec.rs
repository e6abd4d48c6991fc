//! Data-parallel execution with a sequential fallback.
//!
//! Every parallel loop in the crate goes through [`map_indexed`]. Work items
//! are addressed by index and each item derives its own random stream from
//! `(master seed, item index)` with [`stream_seed`], so results never depend
//! on how rayon splits the work or on the thread count. Reductions over the
//! collected values use [`pairwise_sum`] in index order.
//!
//! Without the `parallel` feature, [`Execution::Parallel`] silently runs
//! sequentially.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of work item `index` under `master`:
/// `mix64(master ^ mix64(index + 0x9e3779b97f4a7c15))`.
pub fn stream_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

pub fn stream_rng(master: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(stream_seed(master, index))
}

/// `(0..n).map(f)` collected in index order, in parallel when requested.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Sum by recursive halving; the result depends only on the input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean and standard error (sample std / sqrt(n)) of a sample.
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Number of samples per seeded work item in Monte Carlo loops.
pub const MC_CHUNK: usize = 1024;

/// Draws `samples` values, chunked so that each chunk owns one rng stream.
pub fn sample_chunked<F>(samples: usize, seed: u64, exec: Execution, draw: F) -> Vec<f64>
where
    F: Fn(&mut StreamRng) -> f64 + Sync + Send,
{
    let chunks = samples.div_ceil(MC_CHUNK);
    map_indexed(chunks, exec, |c| {
        let mut rng = stream_rng(seed, c as u64);
        let len = MC_CHUNK.min(samples - c * MC_CHUNK);
        (0..len).map(|_| draw(&mut rng)).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}
