//! Execution-mode switch between sequential and rayon-backed data parallelism.
//!
//! All parallel loops in the crate run over independent jobs (experiment
//! cells, forest trees, design restarts, tuning trials) and merge results in
//! input order, so the outcome is identical in both modes and for any thread
//! count. The `parallel` feature controls whether rayon is compiled in at
//! all; with the feature enabled, callers can still request sequential
//! execution, which the benchmark suite uses to compare both paths.

/// How independent jobs are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    #[cfg(feature = "parallel")]
    fn default() -> Self {
        Execution::Parallel
    }
    #[cfg(not(feature = "parallel"))]
    fn default() -> Self {
        Execution::Sequential
    }
}

/// Maps `f` over `items`, preserving input order in the output.
pub fn map_indexed<T, U, F>(mode: Execution, items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    match mode {
        Execution::Sequential => items.into_iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.into_par_iter().map(f).collect()
        }
    }
}

/// Runs `f` for each index in `0..n`, returning results in index order.
pub fn map_range<U, F>(mode: Execution, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    map_indexed(mode, (0..n).collect(), f)
}
