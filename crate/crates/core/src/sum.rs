//! Deterministic summation.
//!
//! Sums are split into fixed blocks of [`BLOCK`] terms. Each block is summed
//! left to right, and block sums are combined by a balanced pairwise tree.
//! Block boundaries never depend on the number of worker threads, so results
//! are bit-identical for any thread count.

use num_complex::Complex64;
use rayon::prelude::*;

pub const BLOCK: usize = 4096;

fn tree_reduce(mut parts: Vec<Complex64>) -> Complex64 {
    if parts.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    while parts.len() > 1 {
        parts = parts
            .chunks(2)
            .map(|c| if c.len() == 2 { c[0] + c[1] } else { c[0] })
            .collect();
    }
    parts[0]
}

/// Sum `term(i)` for `i` in `0..n`; `block(start, end)` must return the
/// left-to-right sum over one block.
pub fn blocked_sum<F>(n: usize, block: F) -> Complex64
where
    F: Fn(usize, usize) -> Complex64 + Sync,
{
    let nblocks = n.div_ceil(BLOCK);
    let parts: Vec<Complex64> = (0..nblocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK;
            block(start, (start + BLOCK).min(n))
        })
        .collect();
    tree_reduce(parts)
}

/// Real-valued convenience wrapper over a slice.
pub fn sum_f64(values: &[f64]) -> f64 {
    blocked_sum(values.len(), |s, e| {
        Complex64::new(values[s..e].iter().sum::<f64>(), 0.0)
    })
    .re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_sum_on_integers() {
        let v: Vec<f64> = (0..10_000).map(|i| (i % 7) as f64).collect();
        let naive: f64 = v.iter().sum();
        assert_eq!(sum_f64(&v), naive);
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(sum_f64(&[]), 0.0);
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let v: Vec<f64> = (0..50_000).map(|i| ((i as f64) * 0.37).sin()).collect();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sum_f64(&v));
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| sum_f64(&v));
        assert_eq!(one.to_bits(), four.to_bits());
    }
}
