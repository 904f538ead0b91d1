//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the `Parallel` mode runs on the
//! rayon pool; without it every mode runs sequentially. Results never depend
//! on the mode: work is split into index-addressed items and reduced in index
//! order.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Execution {
    Sequential,
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

/// Maps `f` over `0..n` and collects results in index order.
pub fn map_indices<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
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

/// Maps `f` over a slice and collects results in order.
pub fn map_slice<S, T, F>(exec: Execution, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Sums `f(i)` over `0..n`. Integer sums are exact, so the result is
/// independent of the mode.
pub fn sum_indices<F>(exec: Execution, n: usize, f: F) -> u64
where
    F: Fn(usize) -> u64 + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).sum()
        }
        _ => (0..n).map(f).sum(),
    }
}
