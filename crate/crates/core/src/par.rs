//! Chunked data parallelism with a sequential fallback.
//!
//! Work is split into fixed-size index chunks whose results come back in chunk
//! order, so callers that combine them sequentially get bit-identical output
//! whatever the thread count.

use std::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    Sequential,
    /// Rayon's current pool; the same as `Sequential` without the `parallel` feature.
    #[default]
    Rayon,
}

impl Parallelism {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Rayon
    }
}

/// Calls `f` on consecutive ranges of at most `chunk` indices covering `0..n`
/// and returns the results in range order.
pub fn map_chunks<T, F>(n: usize, chunk: usize, mode: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let ranges: Vec<Range<usize>> = (0..n).step_by(chunk).map(|s| s..(s + chunk).min(n)).collect();
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return ranges.into_par_iter().map(f).collect();
    }
    let _ = mode;
    ranges.into_iter().map(f).collect()
}

/// Runs `f` inside a dedicated pool of `threads` workers (no-op without the
/// `parallel` feature).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .expect("thread pool");
        pool.install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Number of worker threads available to [`Parallelism::Rayon`].
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_range_in_order() {
        for mode in [Parallelism::Sequential, Parallelism::Rayon] {
            let out = map_chunks(10, 3, mode, |r| r.collect::<Vec<_>>());
            assert_eq!(out, vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8], vec![9]]);
            assert!(map_chunks(0, 3, mode, |r| r.len()).is_empty());
        }
    }

    #[test]
    fn pool_size_respected() {
        let n = with_threads(2, current_threads);
        assert_eq!(n, if cfg!(feature = "parallel") { 2 } else { 1 });
    }
}
