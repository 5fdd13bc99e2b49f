//! Trial-level data parallelism.
//!
//! With the `parallel` feature (default) [`map_indexed`] fans out over the
//! rayon pool; without it, it is the sequential loop. Output order is always
//! index order, so results do not depend on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..count).map(f)` collected in index order, possibly in parallel.
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_seq(count, f)
    }
}

/// Always sequential; the reference path for benches and equivalence tests.
pub fn map_indexed_seq<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}

pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
