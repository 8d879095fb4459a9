//! Thin indexed-map abstraction over rayon with a sequential fallback.
//!
//! Results are always collected into index order, so callers observe the same
//! output regardless of thread count or whether the `parallel` feature is
//! enabled at all.

/// Maps `0..n` through `f`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn indexed_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn indexed_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Runs `f` on a pool of `threads` workers (`None` = library default).
///
/// With the `parallel` feature disabled the thread count is ignored and `f`
/// runs on the calling thread.
#[cfg(feature = "parallel")]
pub fn with_thread_count<T, F>(threads: Option<usize>, f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match threads {
        None => f(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("failed to build worker pool");
            pool.install(f)
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_thread_count<T, F>(_threads: Option<usize>, f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    f()
}
