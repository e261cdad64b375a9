//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use binsub_core::sigma_model::{validate_spec, SubgroupModel};
use binsub_core::zlattice::{minor_gcd_oracle, IntMatrix, LatticeImageStatus, DEFAULT_MINOR_CAP};
use itertools::Itertools;
use num_bigint::BigUint;
use num_integer::Integer;
use rand::Rng;

/// A random valid model with `m ≤ max_m` and `r ≤ max_r`.
pub fn random_model<R: Rng>(rng: &mut R, max_m: usize, max_r: usize) -> SubgroupModel {
    let m = rng.gen_range(2..=max_m);
    let r = rng.gen_range(1..=max_r);
    let min_bits = usize::BITS - m.leading_zeros();
    let sigmas: Vec<Vec<i64>> = (0..r)
        .map(|_| {
            let bits = rng.gen_range(min_bits..=min_bits + 2);
            let top = (1i64 << bits) - 1;
            let mut vals: Vec<i64> = Vec::with_capacity(m);
            while vals.len() < m {
                let v = rng.gen_range(1..=top);
                if !vals.contains(&v) {
                    vals.push(v);
                }
            }
            vals
        })
        .collect();
    SubgroupModel::new(validate_spec(&sigmas).unwrap(), rng.gen_bool(0.5))
}

/// Random `rows × cols` 0/1 matrix.
pub fn random_binary<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> IntMatrix {
    let data: Vec<Vec<i64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(0..=1)).collect())
        .collect();
    IntMatrix::from_rows(cols, &data)
}

/// Binary strings of length `n` over `k` letters that are strictly smaller
/// than each of their proper rotations.
pub fn lyndon_count(n: usize, k: u32) -> u64 {
    let total = (k as u64).pow(n as u32);
    let mut count = 0;
    let mut word = vec![0u32; n];
    for mut code in 0..total {
        for slot in word.iter_mut().rev() {
            *slot = (code % k as u64) as u32;
            code /= k as u64;
        }
        if (1..n).all(|s| {
            let rotated = word[s..].iter().chain(&word[..s]);
            word.iter().lt(rotated)
        }) {
            count += 1;
        }
    }
    count
}

/// Row lattice of `cols` (binary values, bit j = row j), with an all-ones
/// row when `diagonal`.
pub fn column_matrix(cols: &[u64], l: usize, diagonal: bool) -> IntMatrix {
    let mut rows: Vec<Vec<i64>> = (0..l)
        .map(|j| cols.iter().map(|&x| ((x >> j) & 1) as i64).collect())
        .collect();
    if diagonal {
        rows.push(vec![1; cols.len()]);
    }
    IntMatrix::from_rows(cols.len(), &rows)
}

/// `(onto over ℤ, onto over F₂, finite index)` for one set of columns, all
/// read off the k×k minors.
pub fn oracle_flags(cols: &[u64], l: usize, diagonal: bool) -> [bool; 3] {
    let status = minor_gcd_oracle(&column_matrix(cols, l, diagonal), DEFAULT_MINOR_CAP).unwrap();
    let odd = status.index().is_some_and(|i| i.is_odd());
    [status == LatticeImageStatus::Onto, odd, status.is_full_rank()]
}

/// Naive counts of `l`-bit σ sets of size `m` meeting each target on all
/// k-subsets, ordered as `[over ℤ, over F₂, virtual]`.
pub fn brute_counts(m: usize, l: usize, k: usize, diagonal: bool) -> [u128; 3] {
    let mut counts = [0u128; 3];
    if (1u64 << l) - 1 < m as u64 {
        return counts;
    }
    for set in (1..(1u64 << l)).combinations(m) {
        let mut ok = [true; 3];
        for subset in set.iter().copied().combinations(k) {
            let flags = oracle_flags(&subset, l, diagonal);
            for t in 0..3 {
                ok[t] &= flags[t];
            }
            if !ok.iter().any(|&b| b) {
                break;
            }
        }
        for t in 0..3 {
            counts[t] += ok[t] as u128;
        }
    }
    counts
}

pub fn big(v: u64) -> BigUint {
    BigUint::from(v)
}
