//! Lexicographic k-subset enumeration and an order-preserving parallel scan.

use rayon::prelude::*;

/// Subsets of `{0, …, n-1}` of size `k`, in lexicographic order.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let current = (k <= n).then(|| (0..k).collect());
        Combinations { n, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let c = self.current.as_mut().expect("checked above");
        let k = c.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if c[i] < self.n - k + i {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

pub fn mask_of(subset: &[usize]) -> u64 {
    subset.iter().fold(0u64, |m, &i| m | (1 << i))
}

/// Items per parallel batch. Fixed so that results never depend on the
/// number of worker threads.
pub const BATCH: usize = 2048;

/// Maps `f` over `items` in fixed-size batches, each batch in parallel, and
/// hands results to `visit` in input order. Stops after the batch in which
/// `visit` returns `true` or `keep_going` returns `false`. Returns whether
/// the scan ran to completion.
pub fn ordered_scan<I, T, R, F, V, K>(items: I, f: F, mut visit: V, mut keep_going: K) -> bool
where
    I: Iterator<Item = T>,
    T: Send + Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
    V: FnMut(T, R) -> bool,
    K: FnMut() -> bool,
{
    let mut items = items.peekable();
    while items.peek().is_some() {
        if !keep_going() {
            return false;
        }
        let batch: Vec<T> = items.by_ref().take(BATCH).collect();
        let results: Vec<R> = batch.par_iter().map(&f).collect();
        for (item, result) in batch.into_iter().zip(results) {
            if visit(item, result) {
                return true;
            }
        }
    }
    true
}
