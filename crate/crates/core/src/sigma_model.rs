//! Σ-specifications, their binary arrays, and the modeled subgroup.
//!
//! A specification is a list of `r` lists, one per basis letter of the free
//! group, each holding `m` distinct positive integers. Column `k` of the array
//! for letter `i` is the binary expansion of `x_{ik}` (units in row 0); row `j`
//! is the multi-index of the generator `a_{ij}`. The subgroup itself is only
//! ever represented through these rows: every question this crate answers
//! factors through the abelianization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum number of direct factors; row masks are single machine words.
pub const WORD_BITS: usize = 64;

/// Fields are 0-based; the σ-entry messages count letters and entries from 1.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SigmaError {
    #[error("specification has no letters")]
    NoLetters,
    #[error("need at least two factors, got m = {0}")]
    TooFewFactors(usize),
    #[error("m = {0} exceeds the word width of {WORD_BITS} factors")]
    TooManyFactors(usize),
    #[error("letter {}: list has length {found}, expected {expected}", .letter + 1)]
    LengthMismatch {
        letter: usize,
        expected: usize,
        found: usize,
    },
    #[error("letter {}, entry {}: {value} is not positive", .letter + 1, .position + 1)]
    NonPositiveEntry {
        letter: usize,
        position: usize,
        value: i64,
    },
    #[error("letter {}: entries {} and {} both hold {value}", .letter + 1, .first + 1, .second + 1)]
    DuplicateEntry {
        letter: usize,
        first: usize,
        second: usize,
        value: u64,
    },
    #[error("letter {letter} out of range (r = {r})")]
    LetterOutOfRange { letter: usize, r: usize },
    #[error("row {row} out of range for letter {letter} ({rows} rows)")]
    RowOutOfRange {
        letter: usize,
        row: usize,
        rows: usize,
    },
    #[error("rows {first} and {second} of letter {letter} both have a 1 in column {column}")]
    OverlapError {
        letter: usize,
        first: usize,
        second: usize,
        column: usize,
    },
}

/// A validated Σ = (σ₁, …, σ_r).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<u64>>")]
pub struct SigmaSpec {
    sigmas: Vec<Vec<u64>>,
}

impl SigmaSpec {
    pub fn r(&self) -> usize {
        self.sigmas.len()
    }

    pub fn m(&self) -> usize {
        self.sigmas[0].len()
    }

    pub fn sigmas(&self) -> &[Vec<u64>] {
        &self.sigmas
    }

    pub fn sigma(&self, letter: usize) -> &[u64] {
        &self.sigmas[letter]
    }

    /// True when every letter carries the same list.
    pub fn is_single_sigma(&self) -> bool {
        self.sigmas.windows(2).all(|w| w[0] == w[1])
    }

    /// Builds a spec from unsigned values, running the same checks as
    /// [`validate_spec`].
    pub fn from_unsigned(sigmas: Vec<Vec<u64>>) -> Result<Self, SigmaError> {
        let raw: Vec<Vec<i64>> = sigmas
            .iter()
            .map(|s| {
                s.iter()
                    .map(|&x| i64::try_from(x).unwrap_or(i64::MIN))
                    .collect()
            })
            .collect();
        validate_spec(&raw)
    }
}

impl TryFrom<Vec<Vec<i64>>> for SigmaSpec {
    type Error = SigmaError;

    fn try_from(raw: Vec<Vec<i64>>) -> Result<Self, Self::Error> {
        validate_spec(&raw)
    }
}

impl From<SigmaSpec> for Vec<Vec<u64>> {
    fn from(spec: SigmaSpec) -> Self {
        spec.sigmas
    }
}

pub fn validate_spec(raw: &[Vec<i64>]) -> Result<SigmaSpec, SigmaError> {
    let first = raw.first().ok_or(SigmaError::NoLetters)?;
    let m = first.len();
    for (letter, list) in raw.iter().enumerate() {
        if list.len() != m {
            return Err(SigmaError::LengthMismatch {
                letter,
                expected: m,
                found: list.len(),
            });
        }
    }
    if m < 2 {
        return Err(SigmaError::TooFewFactors(m));
    }
    if m > WORD_BITS {
        return Err(SigmaError::TooManyFactors(m));
    }
    let mut sigmas = Vec::with_capacity(raw.len());
    for (letter, list) in raw.iter().enumerate() {
        let mut values = Vec::with_capacity(m);
        for (position, &value) in list.iter().enumerate() {
            if value < 1 {
                return Err(SigmaError::NonPositiveEntry {
                    letter,
                    position,
                    value,
                });
            }
            values.push(value as u64);
        }
        for second in 1..m {
            if let Some(first) = values[..second].iter().position(|&v| v == values[second]) {
                return Err(SigmaError::DuplicateEntry {
                    letter,
                    first,
                    second,
                    value: values[second],
                });
            }
        }
        sigmas.push(values);
    }
    Ok(SigmaSpec { sigmas })
}

/// Number of binary digits of a positive integer, `⌊1 + log₂ x⌋`.
pub fn bit_length(x: u64) -> usize {
    (u64::BITS - x.leading_zeros()) as usize
}

/// The `l × m` 0/1 array whose columns are binary expansions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryArray {
    columns: Vec<u64>,
    rows: Vec<u64>,
}

impl BinaryArray {
    /// Builds the array from a list of column values. Zero columns and
    /// duplicates are the caller's concern; [`build_array`] takes validated
    /// input.
    pub fn from_columns(columns: Vec<u64>) -> Self {
        let l = columns.iter().map(|&x| bit_length(x)).max().unwrap_or(0);
        let rows = (0..l)
            .map(|j| {
                columns
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| (x >> j) & 1 == 1)
                    .fold(0u64, |acc, (k, _)| acc | (1 << k))
            })
            .collect();
        BinaryArray { columns, rows }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    /// Column values: reading column `k` as a binary integer.
    pub fn columns(&self) -> &[u64] {
        &self.columns
    }

    /// Row masks: bit `k` of row `j` is `ε_j(x_k)`.
    pub fn row_masks(&self) -> &[u64] {
        &self.rows
    }

    pub fn bit(&self, row: usize, col: usize) -> bool {
        (self.columns[col] >> row) & 1 == 1
    }

    pub fn row_bits(&self, row: usize) -> Vec<u8> {
        (0..self.num_cols()).map(|k| self.bit(row, k) as u8).collect()
    }

    /// Rows as 0/1 vectors, row 0 first.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.num_rows()).map(|j| self.row_bits(j)).collect()
    }
}

pub fn build_array(sigma: &[u64]) -> BinaryArray {
    BinaryArray::from_columns(sigma.to_vec())
}

/// The abelianized generator data of B(Σ).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubgroupModel {
    spec: SigmaSpec,
    arrays: Vec<BinaryArray>,
    diagonal: bool,
}

impl SubgroupModel {
    pub fn new(spec: SigmaSpec, diagonal: bool) -> Self {
        let arrays = spec.sigmas().iter().map(|s| build_array(s)).collect();
        SubgroupModel {
            spec,
            arrays,
            diagonal,
        }
    }

    pub fn spec(&self) -> &SigmaSpec {
        &self.spec
    }

    pub fn arrays(&self) -> &[BinaryArray] {
        &self.arrays
    }

    pub fn diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn r(&self) -> usize {
        self.spec.r()
    }

    pub fn m(&self) -> usize {
        self.spec.m()
    }

    /// Mask with one bit per factor.
    pub fn all_factors_mask(&self) -> u64 {
        full_mask(self.m())
    }

    /// Row masks of block `letter`, with the all-ones row appended when the
    /// diagonal element is adjoined.
    pub fn block_rows(&self, letter: usize) -> Vec<u64> {
        let mut rows = self.arrays[letter].row_masks().to_vec();
        if self.diagonal {
            rows.push(self.all_factors_mask());
        }
        rows
    }
}

pub(crate) fn full_mask(m: usize) -> u64 {
    if m >= 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

fn check_bounds(m: usize, r: usize) -> Result<(), SigmaError> {
    if r == 0 {
        return Err(SigmaError::NoLetters);
    }
    if m < 2 {
        return Err(SigmaError::TooFewFactors(m));
    }
    if m > WORD_BITS {
        return Err(SigmaError::TooManyFactors(m));
    }
    Ok(())
}

fn repeated(sigma: Vec<u64>, r: usize) -> SigmaSpec {
    SigmaSpec {
        sigmas: vec![sigma; r],
    }
}

/// B₀(m): every letter uses σ = (1, …, m).
pub fn builtin_b0(m: usize, r: usize) -> Result<SubgroupModel, SigmaError> {
    check_bounds(m, r)?;
    let spec = repeated((1..=m as u64).collect(), r);
    Ok(SubgroupModel::new(spec, false))
}

/// B₁(m) through σ = (3, 5, …, 2m+1).
pub fn builtin_b1(m: usize, r: usize) -> Result<SubgroupModel, SigmaError> {
    check_bounds(m, r)?;
    let spec = repeated((1..=m as u64).map(|k| 2 * k + 1).collect(), r);
    Ok(SubgroupModel::new(spec, false))
}

/// B₁(m) as B₀(m) with the diagonal elements adjoined.
pub fn builtin_b1_diagonal(m: usize, r: usize) -> Result<SubgroupModel, SigmaError> {
    check_bounds(m, r)?;
    let spec = repeated((1..=m as u64).collect(), r);
    Ok(SubgroupModel::new(spec, true))
}

/// Replaces row `first` of block `letter` by the sum of rows `first` and
/// `second`. The two rows must have disjoint supports, so the sum stays 0/1
/// and the move is the Nielsen transformation `a_{i,first} ↦ a_{i,first}·a_{i,second}`.
pub fn row_merge(
    model: &SubgroupModel,
    letter: usize,
    first: usize,
    second: usize,
) -> Result<SubgroupModel, SigmaError> {
    let r = model.r();
    if letter >= r {
        return Err(SigmaError::LetterOutOfRange { letter, r });
    }
    let array = &model.arrays[letter];
    let rows = array.num_rows();
    for row in [first, second] {
        if row >= rows {
            return Err(SigmaError::RowOutOfRange { letter, row, rows });
        }
    }
    let overlap = array.row_masks()[first] & array.row_masks()[second];
    // first == second overlaps on every nonzero column, which is what we want.
    if overlap != 0 {
        return Err(SigmaError::OverlapError {
            letter,
            first,
            second,
            column: overlap.trailing_zeros() as usize,
        });
    }
    let mut sigmas = model.spec.sigmas.clone();
    for x in sigmas[letter].iter_mut() {
        if (*x >> second) & 1 == 1 {
            *x |= 1 << first;
        }
    }
    Ok(SubgroupModel::new(SigmaSpec { sigmas }, model.diagonal))
}

/// Deterministic representative of the letter-permutation orbit, and of the
/// factor-permutation orbit when every letter carries the same list.
pub fn canonicalize(spec: &SigmaSpec) -> SigmaSpec {
    let mut sigmas = spec.sigmas.clone();
    if spec.is_single_sigma() {
        for s in sigmas.iter_mut() {
            s.sort_unstable();
        }
    }
    sigmas.sort();
    SigmaSpec { sigmas }
}
