//! Data-parallel node sweeps with reproducible reductions.
//!
//! Maps run on the rayon pool and collect in index order; every reduction is
//! a sequential compensated sum over that order, so results do not depend on
//! the worker count.

use rayon::prelude::*;

const MIN_CHUNK: usize = 128;

/// Evaluates `f(i)` for `i in 0..n`, in parallel, returning results in index order.
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if n < 2 * MIN_CHUNK {
        return (0..n).map(f).collect();
    }
    (0..n).into_par_iter().with_min_len(MIN_CHUNK).map(f).collect()
}

/// Neumaier-compensated sum in iteration order.
pub fn ordered_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `sum_i a[i] * b[i]`, compensated, in index order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    ordered_sum(a.iter().zip(b).map(|(x, y)| x * y))
}
