//! Execution policy for data-parallel loops.
//!
//! With the `parallel` feature (default) `Execution::Parallel` runs on the
//! rayon global pool, or whatever pool the caller installs. Without the
//! feature both policies run sequentially. Results are always returned in
//! index order, so output never depends on scheduling.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this build can actually run the parallel path.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Evaluates `f(0..n)` and collects the results in index order.
pub fn map_indices<T, F>(n: usize, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}
