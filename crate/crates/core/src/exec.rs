//! Sequential / parallel execution of order-independent reductions.
//!
//! Work is split into fixed-size chunks regardless of the executor, and the
//! per-chunk partial results are combined left to right. Integer sums are exact
//! anyway; floating point sums come out bit-identical whether the chunks ran on
//! one thread or many.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used by all reductions in this crate.
pub const CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon's global (or installed) pool. Falls back to sequential when the
    /// crate is built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Sum `f(i)` for `i in 0..len`.
pub fn sum_u64<F>(exec: Execution, len: usize, f: F) -> u64
where
    F: Fn(usize) -> u64 + Sync + Send,
{
    map_chunks(exec, len, |range| range.map(&f).sum::<u64>())
        .into_iter()
        .sum()
}

/// Sum `f(i)` for `i in 0..len` with a deterministic association order.
pub fn sum_f64<F>(exec: Execution, len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_chunks(exec, len, |range| range.map(&f).sum::<f64>())
        .into_iter()
        .sum()
}

/// Evaluate `f` on consecutive index chunks of [`CHUNK`] and return the
/// results in chunk order.
pub fn map_chunks<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    let chunks = len.div_ceil(CHUNK);
    let range_of = |c: usize| c * CHUNK..((c + 1) * CHUNK).min(len);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..chunks).into_par_iter().map(|c| f(range_of(c))).collect();
    }
    let _ = exec;
    (0..chunks).map(|c| f(range_of(c))).collect()
}

/// Apply `f` to every item, preserving order.
pub fn map_items<I, T, F>(exec: Execution, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}
