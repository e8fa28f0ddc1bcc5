//! Execution strategy for the embarrassingly parallel inner loops.
//!
//! Every parallel site in the crate maps an index range to per-index results
//! and then reduces sequentially in index order, so `Parallel` and
//! `Sequential` produce bit-identical outputs. Without the `parallel` cargo
//! feature, `Parallel` falls back to the sequential path.

/// How to run an index-parallel loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Maps `0..n` through `f`, collecting results in index order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        Execution::Parallel => {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..n).map(f).collect()
            }
        }
    }
}
