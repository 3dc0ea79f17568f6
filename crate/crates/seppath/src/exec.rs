//! Execution-strategy shims: data-parallel with the `parallel` feature,
//! plain iterators without it.  Results are identical in both modes; every
//! reduction below is order-independent or explicitly picks the smallest
//! index, so thread scheduling can never leak into outputs.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting in index order.
pub(crate) fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Smallest index in `0..n` satisfying `pred`, if any.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn find_min_index<F>(n: usize, pred: F) -> Option<usize>
where
    F: Fn(usize) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().find_first(|&i| pred(i))
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).find(|&i| pred(i))
    }
}

/// `true` iff any index in `0..n` satisfies `pred`.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn any_index<F>(n: usize, pred: F) -> bool
where
    F: Fn(usize) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().any(|i| pred(i))
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).any(pred)
    }
}
