//! Exact integer linear algebra on small dense matrices.
//!
//! The question asked of every matrix here is the same: the row lattice `L`
//! of an `n × k` integer matrix sits inside `ℤ^k`; is `L = ℤ^k`, of finite
//! index, or of infinite index? [`lattice_status`] answers it from the Smith
//! normal form. [`minor_gcd_oracle`] answers it independently from the gcd of
//! the maximal minors and exists to cross-check the first.
//!
//! Surjection of a subgroup onto a k-tuple of factors is decided by the
//! `Onto` case (the subgroup contains a term of the lower central series, so
//! surjectivity can be read off on the abelianization). Virtual surjection is
//! decided by "rational rank = k": for a finitely generated nilpotent
//! quotient, a subgroup has finite index iff its image in the abelianization
//! does, so finite index of the H₁-image is equivalent to finite index of the
//! projection.
//!
//! Elimination runs in checked `i64` arithmetic and is redone over `BigInt`
//! if any intermediate overflows.

use std::fmt;

use itertools::Itertools;
use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default column cap for [`minor_gcd_oracle`].
pub const DEFAULT_MINOR_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("column index {index} out of range ({cols} columns)")]
    IndexOutOfRange { index: usize, cols: usize },
    #[error("column index {0} selected twice")]
    DuplicateIndex(usize),
    #[error("{cols} columns exceeds the minor oracle cap of {cap}")]
    CapExceeded { cols: usize, cap: usize },
}

/// Dense integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    /// Panics if the rows have different lengths.
    pub fn from_rows<R: AsRef<[i64]>>(cols: usize, rows: &[R]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            assert_eq!(row.len(), cols, "ragged matrix");
            data.extend_from_slice(row);
        }
        IntMatrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// 0/1 matrix whose row `i` has a 1 in column `c` iff bit `columns[c]` of
    /// `masks[i]` is set.
    pub fn from_masks(masks: &[u64], columns: &[usize]) -> Self {
        let cols = columns.len();
        let mut data = Vec::with_capacity(masks.len() * cols);
        for &mask in masks {
            data.extend(columns.iter().map(|&c| ((mask >> c) & 1) as i64));
        }
        IntMatrix {
            rows: masks.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: i64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[i64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Appends a row.
    pub fn push_row(&mut self, row: &[i64]) {
        assert_eq!(row.len(), self.cols, "ragged matrix");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    fn to_grid<S: Scalar>(&self) -> Vec<Vec<S>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|&v| S::from_i64(v)).collect())
            .collect()
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            writeln!(f, "{}", self.row(i).iter().join(" "))?;
        }
        Ok(())
    }
}

/// Where the row lattice sits inside `ℤ^k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LatticeImageStatus {
    Onto,
    FiniteIndex {
        #[serde(with = "crate::decimal")]
        index: BigUint,
    },
    InfiniteIndex {
        rank: usize,
    },
}

impl LatticeImageStatus {
    pub fn finite_index(index: u64) -> Self {
        LatticeImageStatus::FiniteIndex {
            index: BigUint::from(index),
        }
    }

    pub fn is_onto(&self) -> bool {
        matches!(self, LatticeImageStatus::Onto)
    }

    /// Onto or of finite index.
    pub fn is_full_rank(&self) -> bool {
        !matches!(self, LatticeImageStatus::InfiniteIndex { .. })
    }

    /// Rational rank, given the ambient dimension `k`.
    pub fn rank(&self, k: usize) -> usize {
        match self {
            LatticeImageStatus::InfiniteIndex { rank } => *rank,
            _ => k,
        }
    }

    pub fn index(&self) -> Option<BigUint> {
        match self {
            LatticeImageStatus::Onto => Some(BigUint::one()),
            LatticeImageStatus::FiniteIndex { index } => Some(index.clone()),
            LatticeImageStatus::InfiniteIndex { .. } => None,
        }
    }

    fn from_rank_and_index(rank: usize, k: usize, index: BigUint) -> Self {
        if rank < k {
            LatticeImageStatus::InfiniteIndex { rank }
        } else if index.is_one() {
            LatticeImageStatus::Onto
        } else {
            LatticeImageStatus::FiniteIndex { index }
        }
    }

    /// Status of a direct sum of lattices, each in its own `ℤ^k`. The result
    /// lives in `ℤ^{k·n}`; an infinite-index result carries the total rank.
    pub fn direct_sum<'a>(parts: impl IntoIterator<Item = &'a LatticeImageStatus>, k: usize) -> Self {
        let mut total_rank = 0;
        let mut full = true;
        let mut count = 0;
        let mut index = BigUint::one();
        for part in parts {
            count += 1;
            total_rank += part.rank(k);
            match part.index() {
                Some(i) => index *= i,
                None => full = false,
            }
        }
        if full {
            LatticeImageStatus::from_rank_and_index(k * count, k * count, index)
        } else {
            LatticeImageStatus::InfiniteIndex { rank: total_rank }
        }
    }
}

impl fmt::Display for LatticeImageStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeImageStatus::Onto => write!(f, "onto"),
            LatticeImageStatus::FiniteIndex { index } => write!(f, "finite index {index}"),
            LatticeImageStatus::InfiniteIndex { rank } => write!(f, "infinite index (rank {rank})"),
        }
    }
}

pub fn column_submatrix(m: &IntMatrix, cols: &[usize]) -> Result<IntMatrix, LatticeError> {
    for (pos, &c) in cols.iter().enumerate() {
        if c >= m.cols {
            return Err(LatticeError::IndexOutOfRange {
                index: c,
                cols: m.cols,
            });
        }
        if cols[..pos].contains(&c) {
            return Err(LatticeError::DuplicateIndex(c));
        }
    }
    let mut out = IntMatrix::zeros(m.rows, cols.len());
    for i in 0..m.rows {
        for (j, &c) in cols.iter().enumerate() {
            out.set(i, j, m.get(i, c));
        }
    }
    Ok(out)
}

/// Integer arithmetic used by the eliminations. `None` signals overflow.
trait Scalar: Clone + PartialEq + fmt::Debug {
    fn from_i64(v: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn magnitude_lt(&self, other: &Self) -> bool;
    fn negated(&self) -> Option<Self>;
    /// Truncating quotient.
    fn quot(&self, d: &Self) -> Option<Self>;
    /// Floor quotient.
    fn div_floor(&self, d: &Self) -> Option<Self>;
    fn is_multiple_of(&self, d: &Self) -> bool;
    /// `self - q * x`
    fn sub_mul(&self, q: &Self, x: &Self) -> Option<Self>;
    fn add(&self, x: &Self) -> Option<Self>;
    fn to_bigint(&self) -> BigInt;
}

impl Scalar for i64 {
    fn from_i64(v: i64) -> Self {
        v
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn is_negative(&self) -> bool {
        *self < 0
    }
    fn magnitude_lt(&self, other: &Self) -> bool {
        self.unsigned_abs() < other.unsigned_abs()
    }
    fn negated(&self) -> Option<Self> {
        self.checked_neg()
    }
    fn quot(&self, d: &Self) -> Option<Self> {
        self.checked_div(*d)
    }
    fn div_floor(&self, d: &Self) -> Option<Self> {
        if *d == -1 {
            return self.checked_neg();
        }
        Some(Integer::div_floor(self, d))
    }
    fn is_multiple_of(&self, d: &Self) -> bool {
        if *d == -1 {
            return true;
        }
        self % d == 0
    }
    fn sub_mul(&self, q: &Self, x: &Self) -> Option<Self> {
        self.checked_sub(q.checked_mul(*x)?)
    }
    fn add(&self, x: &Self) -> Option<Self> {
        self.checked_add(*x)
    }
    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Scalar for BigInt {
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_negative(&self) -> bool {
        self.sign() == Sign::Minus
    }
    fn magnitude_lt(&self, other: &Self) -> bool {
        self.magnitude() < other.magnitude()
    }
    fn negated(&self) -> Option<Self> {
        Some(-self)
    }
    fn quot(&self, d: &Self) -> Option<Self> {
        Some(self / d)
    }
    fn div_floor(&self, d: &Self) -> Option<Self> {
        Some(Integer::div_floor(self, d))
    }
    fn is_multiple_of(&self, d: &Self) -> bool {
        Zero::is_zero(&(self % d))
    }
    fn sub_mul(&self, q: &Self, x: &Self) -> Option<Self> {
        Some(self - q * x)
    }
    fn add(&self, x: &Self) -> Option<Self> {
        Some(self + x)
    }
    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
}

/// Position of the nonzero entry of least magnitude in `grid[t.., t..]`.
fn min_pivot<S: Scalar>(grid: &[Vec<S>], t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in grid.iter().enumerate().skip(t) {
        for (j, v) in row.iter().enumerate().skip(t) {
            if v.is_zero() {
                continue;
            }
            match best {
                Some((bi, bj)) if !v.magnitude_lt(&grid[bi][bj]) => {}
                _ => best = Some((i, j)),
            }
        }
    }
    best
}

fn swap_cols<S: Scalar>(grid: &mut [Vec<S>], a: usize, b: usize) {
    if a != b {
        for row in grid.iter_mut() {
            row.swap(a, b);
        }
    }
}

/// Nonzero diagonal of the Smith normal form, each entry positive and each
/// dividing the next.
fn smith_diagonal<S: Scalar>(mut grid: Vec<Vec<S>>) -> Option<Vec<S>> {
    let rows = grid.len();
    let cols = grid.first().map_or(0, |r| r.len());
    let mut diagonal = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        let Some((pi, pj)) = min_pivot(&grid, t) else {
            break;
        };
        grid.swap(t, pi);
        swap_cols(&mut grid, t, pj);
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if !grid[i][t].is_zero() {
                    let q = grid[i][t].quot(&grid[t][t])?;
                    for j in t..cols {
                        grid[i][j] = grid[i][j].sub_mul(&q, &grid[t][j])?;
                    }
                    dirty |= !grid[i][t].is_zero();
                }
            }
            for j in t + 1..cols {
                if !grid[t][j].is_zero() {
                    let q = grid[t][j].quot(&grid[t][t])?;
                    for i in t..rows {
                        grid[i][j] = grid[i][j].sub_mul(&q, &grid[i][t])?;
                    }
                    dirty |= !grid[t][j].is_zero();
                }
            }
            if dirty {
                // a remainder smaller than the pivot survived; move it in
                let mut best = (t, t);
                for i in t + 1..rows {
                    if !grid[i][t].is_zero() && grid[i][t].magnitude_lt(&grid[best.0][best.1]) {
                        best = (i, t);
                    }
                }
                for j in t + 1..cols {
                    if !grid[t][j].is_zero() && grid[t][j].magnitude_lt(&grid[best.0][best.1]) {
                        best = (t, j);
                    }
                }
                grid.swap(t, best.0);
                swap_cols(&mut grid, t, best.1);
                continue;
            }
            let offender = (t + 1..rows).find(|&i| {
                (t + 1..cols).any(|j| !grid[i][j].is_multiple_of(&grid[t][t]))
            });
            match offender {
                Some(i) => {
                    for j in t..cols {
                        grid[t][j] = grid[t][j].add(&grid[i][j])?;
                    }
                }
                None => break,
            }
        }
        let pivot = grid[t][t].clone();
        diagonal.push(if pivot.is_negative() { pivot.negated()? } else { pivot });
        t += 1;
    }
    Some(diagonal)
}

/// Elementary divisors (the nonzero Smith diagonal).
pub fn elementary_divisors(m: &IntMatrix) -> Vec<BigUint> {
    let to_unsigned = |v: BigInt| v.to_biguint().expect("elementary divisors are positive");
    match smith_diagonal::<i64>(m.to_grid()) {
        Some(d) => d.into_iter().map(|v| to_unsigned(BigInt::from(v))).collect(),
        None => smith_diagonal::<BigInt>(m.to_grid())
            .expect("bigint elimination cannot overflow")
            .into_iter()
            .map(to_unsigned)
            .collect(),
    }
}

/// Status of the row lattice of `m` inside `ℤ^{cols}`, from the Smith form.
pub fn lattice_status(m: &IntMatrix) -> LatticeImageStatus {
    let divisors = elementary_divisors(m);
    let rank = divisors.len();
    let index = divisors.into_iter().product();
    LatticeImageStatus::from_rank_and_index(rank, m.cols, index)
}

/// Rank over ℚ.
pub fn rational_rank(m: &IntMatrix) -> usize {
    elementary_divisors(m).len()
}

/// Row-style Hermite normal form: the unique echelon basis of the row
/// lattice with positive pivots and entries above each pivot reduced into
/// `[0, pivot)`. Two matrices have the same row lattice iff their forms are
/// equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HermiteForm {
    pub cols: usize,
    pub rows: Vec<Vec<BigInt>>,
}

fn hermite_rows<S: Scalar>(mut grid: Vec<Vec<S>>, cols: usize) -> Option<Vec<Vec<S>>> {
    let rows = grid.len();
    let mut p = 0;
    for c in 0..cols {
        if p == rows {
            break;
        }
        loop {
            let mut best: Option<usize> = None;
            for i in p..rows {
                if grid[i][c].is_zero() {
                    continue;
                }
                match best {
                    Some(b) if !grid[i][c].magnitude_lt(&grid[b][c]) => {}
                    _ => best = Some(i),
                }
            }
            let Some(b) = best else { break };
            grid.swap(p, b);
            let mut clean = true;
            for i in p + 1..rows {
                if !grid[i][c].is_zero() {
                    let q = grid[i][c].quot(&grid[p][c])?;
                    for j in c..cols {
                        grid[i][j] = grid[i][j].sub_mul(&q, &grid[p][j])?;
                    }
                    clean &= grid[i][c].is_zero();
                }
            }
            if clean {
                break;
            }
        }
        if grid.get(p).is_none_or(|row| row[c].is_zero()) {
            continue;
        }
        if grid[p][c].is_negative() {
            for j in c..cols {
                grid[p][j] = grid[p][j].negated()?;
            }
        }
        for i in 0..p {
            let q = grid[i][c].div_floor(&grid[p][c])?;
            if !q.is_zero() {
                for j in c..cols {
                    grid[i][j] = grid[i][j].sub_mul(&q, &grid[p][j])?;
                }
            }
        }
        p += 1;
    }
    grid.truncate(p);
    Some(grid)
}

pub fn hermite_form(m: &IntMatrix) -> HermiteForm {
    let rows = match hermite_rows::<i64>(m.to_grid(), m.cols) {
        Some(g) => g
            .into_iter()
            .map(|r| r.iter().map(Scalar::to_bigint).collect())
            .collect(),
        None => hermite_rows::<BigInt>(m.to_grid(), m.cols).expect("bigint elimination cannot overflow"),
    };
    HermiteForm { cols: m.cols, rows }
}

/// Rank over the two-element field, by elimination on packed rows.
pub fn rank_f2(m: &IntMatrix) -> usize {
    let words = m.cols.div_ceil(64).max(1);
    let mut packed: Vec<Vec<u64>> = (0..m.rows)
        .map(|i| {
            let mut w = vec![0u64; words];
            for (j, &v) in m.row(i).iter().enumerate() {
                if v.rem_euclid(2) == 1 {
                    w[j / 64] |= 1 << (j % 64);
                }
            }
            w
        })
        .collect();
    let mut rank = 0;
    for c in 0..m.cols {
        let (word, bit) = (c / 64, 1u64 << (c % 64));
        let Some(p) = (rank..packed.len()).find(|&i| packed[i][word] & bit != 0) else {
            continue;
        };
        packed.swap(rank, p);
        let pivot = packed[rank].clone();
        for (i, row) in packed.iter_mut().enumerate() {
            if i != rank && row[word] & bit != 0 {
                for (a, b) in row.iter_mut().zip(&pivot) {
                    *a ^= b;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Rank over F₂ of a set of bit-mask vectors.
pub fn rank_f2_masks(vectors: impl IntoIterator<Item = u64>) -> usize {
    let mut basis = [0u64; 64];
    let mut rank = 0;
    for mut v in vectors {
        while v != 0 {
            let top = 63 - v.leading_zeros() as usize;
            if basis[top] == 0 {
                basis[top] = v;
                rank += 1;
                break;
            }
            v ^= basis[top];
        }
    }
    rank
}

/// Determinant by fraction-free (Bareiss) elimination, exact in `i128` for
/// the small minors this is used on.
fn bareiss_det(mut a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Independent status computation from `j × j` minors: the rank is the
/// largest `j` with a nonzero minor, and for full rank the index is the gcd
/// of the maximal minors.
pub fn minor_gcd_oracle(m: &IntMatrix, cap: usize) -> Result<LatticeImageStatus, LatticeError> {
    let k = m.cols;
    if k > cap {
        return Err(LatticeError::CapExceeded { cols: k, cap });
    }
    let minor = |rows: &[usize], cols: &[usize]| -> i128 {
        let grid = rows
            .iter()
            .map(|&i| cols.iter().map(|&j| m.get(i, j) as i128).collect())
            .collect();
        bareiss_det(grid)
    };
    if m.rows >= k {
        let all_cols: Vec<usize> = (0..k).collect();
        let g = (0..m.rows)
            .combinations(k)
            .fold(0i128, |g, rows| g.gcd(&minor(&rows, &all_cols)));
        if g != 0 {
            let index = BigUint::from(g.unsigned_abs());
            return Ok(LatticeImageStatus::from_rank_and_index(k, k, index));
        }
    }
    let top = m.rows.min(k);
    let rank = (1..=top)
        .rev()
        .find(|&j| {
            (0..m.rows).combinations(j).any(|rows| {
                (0..k)
                    .combinations(j)
                    .any(|cols| minor(&rows, &cols) != 0)
            })
        })
        .unwrap_or(0);
    Ok(LatticeImageStatus::InfiniteIndex { rank })
}

/// Small-integer determinant helper exposed for tests and reports.
pub fn determinant(m: &IntMatrix) -> Option<i128> {
    if m.rows != m.cols {
        return None;
    }
    let grid = (0..m.rows)
        .map(|i| m.row(i).iter().map(|&v| v as i128).collect())
        .collect();
    Some(bareiss_det(grid))
}
