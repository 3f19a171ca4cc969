//! Data-parallel map over an index range.
//!
//! Per-fiber work (orthonormalization, eigendecomposition, covariance checks)
//! is independent across fundamental-domain points, so it is expressed through
//! this helper. With the `parallel` feature the map runs on the current rayon
//! pool; without it the same code compiles to a sequential loop. Results come
//! back in index order either way, so downstream reductions are deterministic.

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Always-sequential variant of [`map_indexed`], independent of the feature
/// flag; the benchmark suite uses it as the comparison baseline.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Fold the per-index values `f(i)` into their maximum; NaN-free inputs assumed.
pub fn max_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indexed(n, f).into_iter().fold(0.0f64, f64::max)
}
