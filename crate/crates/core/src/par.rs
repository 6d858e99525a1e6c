//! Thin data-parallelism shim.
//!
//! With the `parallel` feature (the default) cell-local work fans out over
//! rayon; without it everything runs sequentially. The runtime switch lets
//! benchmarks compare both code paths in a single binary and lets callers
//! force sequential execution (e.g. when embedding in an already-parallel
//! host).

use std::sync::atomic::{AtomicBool, Ordering};

static PARALLEL: AtomicBool = AtomicBool::new(cfg!(feature = "parallel"));

/// Returns whether data-parallel execution is currently enabled.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::Relaxed)
}

/// Enables or disables the rayon code paths at runtime.
///
/// Has no effect when the crate was built without the `parallel` feature.
pub fn set_parallel_enabled(on: bool) {
    PARALLEL.store(on, Ordering::Relaxed);
}

/// Sizes the global worker pool. Must be called before any parallel work;
/// later calls fail because the pool is already built. Without the
/// `parallel` feature this is a no-op.
#[allow(unused_variables)]
pub fn configure_thread_pool(threads: usize) -> std::result::Result<(), String> {
    #[cfg(feature = "parallel")]
    {
        return rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string());
    }
    #[cfg(not(feature = "parallel"))]
    Ok(())
}

/// Maps `f` over `0..n`, in parallel when enabled, preserving index order.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel_enabled() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}
