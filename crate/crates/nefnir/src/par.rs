//! Data-parallel execution of the batch-shaped inner loops (candidate
//! scoring, batch lemmatization, evaluation) with a sequential fallback.
//!
//! Built with the `parallel` feature (the default), [`Threading::Parallel`]
//! runs on rayon; without it, both modes run sequentially. Every call site
//! is an order-preserving map or a reduction under a total order, so the two
//! modes produce identical results.

/// How batch-shaped work is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threading {
    Sequential,
    /// Rayon work-stealing. Falls back to sequential when the crate is built
    /// without the `parallel` feature.
    Parallel,
}

impl Default for Threading {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Threading::Parallel
        } else {
            Threading::Sequential
        }
    }
}

#[cfg(feature = "parallel")]
pub(crate) fn map_slice<T, U, F>(mode: Threading, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    match mode {
        Threading::Sequential => items.iter().map(f).collect(),
        Threading::Parallel => items.par_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_slice<T, U, F>(_mode: Threading, items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
