//! Data-parallel execution with a sequential fallback.
//!
//! Work is split into fixed-size chunks, each with its own random stream,
//! so results are identical whichever [`Execution`] mode runs them.

use rand_chacha::ChaCha8Rng;

use crate::rng;

/// Draws per random stream in [`draw_chunked`].
pub const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is on; sequential otherwise.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel. Output order is by index.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Produces `n` values, `f(rng, i)` for draw `i`, with draw `i` taken from
/// stream `stream_base + i / CHUNK` of `seed`.
pub fn draw_chunked<T, F>(exec: Execution, n: usize, seed: u64, stream_base: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let parts = map_indexed(exec, chunks, |c| {
        let mut r = rng::stream(seed, stream_base + c as u64);
        let start = c * CHUNK;
        let end = (start + CHUNK).min(n);
        (start..end).map(|i| f(&mut r, i)).collect::<Vec<T>>()
    });
    parts.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn modes_agree() {
        let f = |r: &mut ChaCha8Rng, i: usize| r.random::<u64>() ^ i as u64;
        let a = draw_chunked(Execution::Sequential, 5000, 9, 0, f);
        let b = draw_chunked(Execution::Parallel, 5000, 9, 0, f);
        assert_eq!(a, b);
        assert_eq!(a.len(), 5000);
    }
}
