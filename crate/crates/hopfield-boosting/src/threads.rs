//! Optional per-column parallelism for batch evaluations.
//!
//! Thread count comes from the `HB_THREADS` environment variable (default 1).
//! Columns are independent and each column's reduction order is fixed, so the
//! numeric results are identical for every thread count.

use std::sync::OnceLock;

static THREADS: OnceLock<usize> = OnceLock::new();

/// Configured worker count; `HB_THREADS` unset, empty, or unparsable means 1.
pub fn configured_threads() -> usize {
    *THREADS.get_or_init(|| {
        std::env::var("HB_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .unwrap_or(1)
    })
}

/// Evaluates `f(0..n)` into a vector, splitting the index range into
/// contiguous chunks across the configured threads. Chunk results are
/// concatenated in index order.
pub fn map_indexed<T, E, F>(n: usize, f: F) -> std::result::Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> std::result::Result<T, E> + Sync,
{
    let threads = configured_threads().min(n.max(1));
    if threads <= 1 || n < 2 {
        return (0..n).map(&f).collect();
    }
    let chunk = n.div_ceil(threads);
    let mut results: Vec<std::result::Result<Vec<T>, E>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let f = &f;
                let lo = t * chunk;
                let hi = ((t + 1) * chunk).min(n);
                scope.spawn(move || (lo..hi).map(f).collect::<std::result::Result<Vec<T>, E>>())
            })
            .collect();
        for h in handles {
            results.push(h.join().expect("worker thread panicked"));
        }
    });
    let mut out = Vec::with_capacity(n);
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}
