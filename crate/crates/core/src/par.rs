//! Execution helpers shared by the data-parallel kernels.
//!
//! With the `parallel` feature the closures run on the rayon pool; without it
//! they run as plain sequential loops. Both lanes produce bit-identical
//! results: work is split into independent chunks addressed by index, and any
//! reduction over the per-chunk values happens afterwards in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f` to consecutive `chunk_len`-sized chunks of `data`, passing the
/// chunk index. Chunks are disjoint, so execution order cannot be observed.
pub(crate) fn for_each_chunk<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Send + Sync,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(i, chunk)| f(i, chunk));

    #[cfg(not(feature = "parallel"))]
    for (i, chunk) in data.chunks_mut(chunk_len).enumerate() {
        f(i, chunk);
    }
}

/// Evaluate `f(0), f(1), ..., f(n-1)` and collect the results in index order.
/// Callers fold the returned vector sequentially, which keeps reductions
/// independent of the worker count.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }

    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
