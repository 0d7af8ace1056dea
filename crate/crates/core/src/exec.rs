//! Deterministic data parallelism.
//!
//! Ensemble work (collapse trajectories, Metropolis chains, phase-space
//! sweeps) is expressed as a map over indices followed by a reduction
//! over a binary tree whose shape depends only on `(n, leaf)`. Floating
//! point combination therefore happens in exactly the same order whether
//! the tree is walked sequentially or by rayon with any number of worker
//! threads, so statistics artifacts are bit-identical across thread
//! counts and across the `parallel` feature boundary.

/// Run `f` inside a rayon pool with the given thread count; `None` keeps
/// the global default. Without the `parallel` feature this just calls `f`.
pub fn with_threads<T, F>(threads: Option<usize>, f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    #[cfg(feature = "parallel")]
    {
        match threads {
            Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("failed to build thread pool")
                .install(f),
            _ => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Map each index and reduce over the fixed tree. Returns `None` for `n == 0`.
pub fn reduce_indexed<T, M, C>(n: usize, leaf: usize, map: &M, combine: &C) -> Option<T>
where
    T: Send,
    M: Fn(usize) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
{
    if n == 0 {
        return None;
    }
    Some(reduce_range(0, n, leaf.max(1), map, combine))
}

/// Sequential variant with the identical combination tree; exists so the
/// benches can compare both schedulers inside one build.
pub fn reduce_indexed_seq<T, M, C>(n: usize, leaf: usize, map: &M, combine: &C) -> Option<T>
where
    M: Fn(usize) -> T,
    C: Fn(T, T) -> T,
{
    if n == 0 {
        return None;
    }
    Some(reduce_range_seq(0, n, leaf.max(1), map, combine))
}

fn reduce_range<T, M, C>(lo: usize, hi: usize, leaf: usize, map: &M, combine: &C) -> T
where
    T: Send,
    M: Fn(usize) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
{
    if hi - lo <= leaf {
        let mut acc = map(lo);
        for i in lo + 1..hi {
            acc = combine(acc, map(i));
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    #[cfg(feature = "parallel")]
    let (a, b) = rayon::join(
        || reduce_range(lo, mid, leaf, map, combine),
        || reduce_range(mid, hi, leaf, map, combine),
    );
    #[cfg(not(feature = "parallel"))]
    let (a, b) = (
        reduce_range(lo, mid, leaf, map, combine),
        reduce_range(mid, hi, leaf, map, combine),
    );
    combine(a, b)
}

fn reduce_range_seq<T, M, C>(lo: usize, hi: usize, leaf: usize, map: &M, combine: &C) -> T
where
    M: Fn(usize) -> T,
    C: Fn(T, T) -> T,
{
    if hi - lo <= leaf {
        let mut acc = map(lo);
        for i in lo + 1..hi {
            acc = combine(acc, map(i));
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    let a = reduce_range_seq(lo, mid, leaf, map, combine);
    let b = reduce_range_seq(mid, hi, leaf, map, combine);
    combine(a, b)
}

/// Map indices to a vector, preserving index order.
pub fn map_indexed<T, M>(n: usize, map: &M) -> Vec<T>
where
    T: Send,
    M: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(map).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(map).collect()
    }
}
