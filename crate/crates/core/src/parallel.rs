//! Index-parallel map helpers.
//!
//! Every parallel loop in this crate writes one independent output slot per
//! index, so results are bit-identical regardless of thread count. Reductions
//! that would depend on summation order are done sequentially by the callers.

use alloc::vec::Vec;

#[cfg(feature = "rayon")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "rayon"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
