//! Binary linear codes attached to binary arrays.
//!
//! The row span of an array over F₂ is a code `C` of length `m`. A nonzero
//! dual word supported on a set `S` of coordinates is exactly a linear
//! relation among the columns indexed by `S`, so every k-tuple of columns is
//! independent over F₂ iff `k` is below the minimum weight of `C^⊥`. This is
//! the F₂ shadow of the k-tuple surjection question; it is necessary for the
//! integral one but not sufficient.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combos::{mask_of, Combinations};
use crate::sigma_model::{full_mask, BinaryArray, SigmaError, SigmaSpec, SubgroupModel};
use crate::zlattice::rank_f2_masks;

/// Default enumeration cap for [`min_weight`].
pub const DEFAULT_WEIGHT_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("weight enumeration needs more than {cap} steps")]
    CapExceeded { cap: u64 },
    #[error("column {0} is all zero")]
    ZeroColumn(usize),
    #[error("columns {0} and {1} are equal")]
    DuplicateColumn(usize, usize),
    #[error("row {row} has length {found}, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("entry at row {row}, column {col} is not 0 or 1")]
    NotBinary { row: usize, col: usize },
    #[error("{0} rows do not fit in a 63-bit column value")]
    TooManyRows(usize),
    #[error(transparent)]
    Sigma(#[from] SigmaError),
    #[error("F₂ subset profile disagrees with the dual weight (letter {letter}, k = {k})")]
    InvariantBreach { letter: usize, k: usize },
}

/// A subspace of `F₂^length`, vectors stored as bit masks (bit `k` is
/// coordinate `k`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearCode {
    length: usize,
    generators: Vec<u64>,
    basis: Vec<u64>,
    name: Option<String>,
}

/// Reduced row echelon basis, pivots on the lowest set bit.
fn reduced_basis(length: usize, vectors: &[u64]) -> Vec<u64> {
    let mut basis: Vec<u64> = Vec::new();
    let mut rows: Vec<u64> = vectors.to_vec();
    for col in 0..length {
        let bit = 1u64 << col;
        let Some(p) = rows.iter().position(|&v| v & bit != 0) else {
            continue;
        };
        let pivot = rows.swap_remove(p);
        for v in rows.iter_mut().chain(basis.iter_mut()) {
            if *v & bit != 0 {
                *v ^= pivot;
            }
        }
        basis.push(pivot);
    }
    basis
}

impl LinearCode {
    pub fn new(length: usize, generators: Vec<u64>) -> Self {
        let mask = full_mask(length);
        let generators: Vec<u64> = generators.into_iter().map(|g| g & mask).collect();
        let basis = reduced_basis(length, &generators);
        LinearCode {
            length,
            generators,
            basis,
            name: None,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn generators(&self) -> &[u64] {
        &self.generators
    }

    /// Reduced echelon basis; pivot of each vector is its lowest set bit.
    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn contains(&self, v: u64) -> bool {
        let mut v = v;
        for &b in &self.basis {
            if v & (b & b.wrapping_neg()) != 0 {
                v ^= b;
            }
        }
        v == 0
    }

    /// Same subspace, regardless of the generators used.
    pub fn same_span(&self, other: &LinearCode) -> bool {
        self.length == other.length && self.basis == other.basis
    }
}

pub fn code_from_block(array: &BinaryArray, diagonal: bool) -> LinearCode {
    let m = array.num_cols();
    let mut generators = array.row_masks().to_vec();
    if diagonal {
        generators.push(full_mask(m));
    }
    LinearCode::new(m, generators)
}

/// Vectors orthogonal to every codeword under `x·y = Σ xᵢyᵢ`.
pub fn dual_code(code: &LinearCode) -> LinearCode {
    let pivots: Vec<(usize, u64)> = code
        .basis
        .iter()
        .map(|&b| (b.trailing_zeros() as usize, b))
        .collect();
    let pivot_mask = pivots.iter().fold(0u64, |m, &(p, _)| m | (1 << p));
    let generators = (0..code.length)
        .filter(|f| pivot_mask & (1 << f) == 0)
        .map(|f| {
            pivots
                .iter()
                .filter(|(_, row)| row & (1 << f) != 0)
                .fold(1u64 << f, |y, &(p, _)| y | (1 << p))
        })
        .collect();
    LinearCode::new(code.length, generators)
}

fn weight_by_codewords(code: &LinearCode) -> usize {
    // Gray-code walk over all nonzero combinations of the basis
    let dim = code.dimension();
    let mut word = 0u64;
    let mut best = usize::MAX;
    for step in 1u64..(1u64 << dim) {
        word ^= code.basis[step.trailing_zeros() as usize];
        best = best.min(word.count_ones() as usize);
    }
    best
}

/// Smallest number of columns of a generator matrix of `C^⊥` that sum to
/// zero; equals the minimum weight of `C`.
fn weight_by_parity_columns(code: &LinearCode, cap: u64) -> Result<Option<usize>, CodeError> {
    let checks = dual_code(code);
    let columns: Vec<u64> = (0..code.length)
        .map(|k| {
            checks
                .basis
                .iter()
                .enumerate()
                .filter(|(_, row)| (*row >> k) & 1 == 1)
                .fold(0u64, |c, (i, _)| c | (1 << i))
        })
        .collect();
    let mut steps = 0u64;
    for w in 1..=code.length {
        for subset in Combinations::new(code.length, w) {
            steps += 1;
            if steps > cap {
                return Err(CodeError::CapExceeded { cap });
            }
            if subset.iter().fold(0u64, |acc, &k| acc ^ columns[k]) == 0 {
                return Ok(Some(w));
            }
        }
    }
    Ok(None)
}

/// Minimum Hamming weight of a nonzero codeword; `None` for the zero code.
pub fn min_weight(code: &LinearCode, cap: u64) -> Result<Option<usize>, CodeError> {
    let dim = code.dimension();
    if dim == 0 {
        return Ok(None);
    }
    if dim < 64 && (1u64 << dim) <= cap {
        return Ok(Some(weight_by_codewords(code)));
    }
    weight_by_parity_columns(code, cap)
}

/// Per-letter code data carried by analysis reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSummary {
    pub letter: usize,
    pub length: usize,
    pub dimension: usize,
    pub min_weight: Option<usize>,
    pub dual_dimension: usize,
    pub dual_min_weight: Option<usize>,
    /// Set when a weight was not computed because of the enumeration cap;
    /// the corresponding weight is then `None`.
    pub cap_exceeded: bool,
}

pub fn code_summary(model: &SubgroupModel, letter: usize, cap: u64) -> CodeSummary {
    let code = code_from_block(&model.arrays()[letter], model.diagonal());
    let dual = dual_code(&code);
    let mut cap_exceeded = false;
    let mut weigh = |c: &LinearCode| match min_weight(c, cap) {
        Ok(w) => w,
        Err(_) => {
            cap_exceeded = true;
            None
        }
    };
    let min_weight = weigh(&code);
    let dual_min_weight = weigh(&dual);
    CodeSummary {
        letter,
        length: code.length(),
        dimension: code.dimension(),
        min_weight,
        dual_dimension: dual.dimension(),
        dual_min_weight,
        cap_exceeded,
    }
}

/// One k-level of the F₂ profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct F2Level {
    pub k: usize,
    pub onto_all: bool,
    /// First failing subset found (0-based factors) and its letter.
    pub witness: Option<(Vec<usize>, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct F2Profile {
    pub m: usize,
    pub levels: Vec<F2Level>,
    /// Largest k such that every k-tuple is F₂-surjected.
    pub max_onto_k: usize,
    /// Per-letter dual weight (`None` when the dual is the zero code).
    pub dual_weights: Vec<Option<usize>>,
    /// `min over letters of (dual weight − 1)`, or `m` when every dual is zero.
    pub k_f2: usize,
}

fn f2_onto(rows: &[u64], subset_mask: u64, k: usize) -> bool {
    rank_f2_masks(rows.iter().map(|&r| r & subset_mask)) == k
}

/// The F₂ surjection profile by direct subset enumeration, checked against
/// the dual-weight characterization on every level.
pub fn f2_profile(model: &SubgroupModel, cap: u64) -> Result<F2Profile, CodeError> {
    let m = model.m();
    let blocks: Vec<Vec<u64>> = (0..model.r()).map(|i| model.block_rows(i)).collect();
    let full: Vec<bool> = blocks.iter().map(|b| rank_f2_masks(b.iter().copied()) == m).collect();

    let mut levels: Vec<F2Level> = Vec::new();
    let mut failure: Option<(Vec<usize>, usize)> = None;
    for k in 2..=m {
        let witness = match &failure {
            // a superset of a failing subset fails too
            Some((subset, letter)) => {
                let mut grown = subset.clone();
                let extra = (0..m).find(|c| !grown.contains(c)).expect("k <= m");
                grown.push(extra);
                grown.sort_unstable();
                debug_assert!(!f2_onto(&blocks[*letter], mask_of(&grown), k));
                Some((grown, *letter))
            }
            None => Combinations::new(m, k).find_map(|subset| {
                let mask = mask_of(&subset);
                (0..blocks.len())
                    .find(|&i| !full[i] && !f2_onto(&blocks[i], mask, k))
                    .map(|letter| (subset, letter))
            }),
        };
        failure.clone_from(&witness);
        levels.push(F2Level {
            k,
            onto_all: witness.is_none(),
            witness,
        });
    }
    let max_onto_k = levels
        .iter()
        .take_while(|l| l.onto_all)
        .map(|l| l.k)
        .last()
        .unwrap_or(1);

    let mut dual_weights = Vec::with_capacity(blocks.len());
    for i in 0..model.r() {
        let code = code_from_block(&model.arrays()[i], model.diagonal());
        dual_weights.push(min_weight(&dual_code(&code), cap)?);
    }
    let k_f2 = dual_weights
        .iter()
        .map(|w| w.map_or(m, |w| w - 1))
        .min()
        .unwrap_or(m);

    for level in &levels {
        if level.onto_all != (level.k <= k_f2) {
            let letter = level.witness.as_ref().map_or(0, |w| w.1);
            return Err(CodeError::InvariantBreach { letter, k: level.k });
        }
    }
    Ok(F2Profile {
        m,
        levels,
        max_onto_k,
        dual_weights,
        k_f2,
    })
}

/// Reads a 0/1 row matrix (row 0 = units) as a single list σ of column values.
pub fn sigma_from_code(rows: &[Vec<u8>]) -> Result<SigmaSpec, CodeError> {
    let m = rows.first().map_or(0, |r| r.len());
    if rows.len() > 63 {
        return Err(CodeError::TooManyRows(rows.len()));
    }
    for (row, r) in rows.iter().enumerate() {
        if r.len() != m {
            return Err(CodeError::RaggedRows {
                row,
                expected: m,
                found: r.len(),
            });
        }
        if let Some(col) = r.iter().position(|&b| b > 1) {
            return Err(CodeError::NotBinary { row, col });
        }
    }
    let columns: Vec<u64> = (0..m)
        .map(|k| {
            rows.iter()
                .enumerate()
                .fold(0u64, |x, (j, r)| x | ((r[k] as u64) << j))
        })
        .collect();
    if let Some(k) = columns.iter().position(|&x| x == 0) {
        return Err(CodeError::ZeroColumn(k));
    }
    for b in 1..m {
        if let Some(a) = columns[..b].iter().position(|&x| x == columns[b]) {
            return Err(CodeError::DuplicateColumn(a, b));
        }
    }
    Ok(SigmaSpec::from_unsigned(vec![columns])?)
}
