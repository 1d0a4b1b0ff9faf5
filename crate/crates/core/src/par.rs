//! Data-parallel maps over independent work items.
//!
//! With the `parallel` feature (default) [`Strategy::Auto`] fans out on the
//! rayon global pool; without it every map runs on the calling thread. Output
//! order always matches input order, so results do not depend on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Parallel when the crate is built with `parallel`, sequential otherwise.
    #[default]
    Auto,
    Sequential,
}

impl Strategy {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Strategy::Auto
    }
}

/// `(0..n).map(f)` collected in index order.
pub fn map_range<R, F>(strategy: Strategy, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if strategy.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = strategy;
    (0..n).map(f).collect()
}

/// `items.iter().map(f)` collected in input order.
pub fn map<T, R, F>(strategy: Strategy, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_range(strategy, items.len(), |i| f(&items[i]))
}
