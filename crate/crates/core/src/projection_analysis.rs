//! k-tuple surjection profiles and the invariants derived from them.
//!
//! The abelianization of a k-tuple of factors `L_{p₁} × … × L_{p_k}` splits
//! as one `ℤ^k` per basis letter, and the generators of block `i` only touch
//! the summand of letter `i`. So the H₁-image of the projection is the direct
//! sum of the row lattices of the column submatrices of each block, and the
//! combined status is onto (or of finite index) iff every block is.
//!
//! Subsets are scanned in lexicographic order, in fixed-size parallel
//! batches; the reported witness is always the lexicographically first
//! failure, whatever the number of threads.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combos::{ordered_scan, Combinations};
use crate::f2codes::{code_summary, f2_profile, CodeError, CodeSummary, DEFAULT_WEIGHT_CAP};
use crate::nilpotent_numerics::{excluded_classes, NumericsError};
use crate::sigma_model::SubgroupModel;
use crate::zlattice::{lattice_status, rational_rank, IntMatrix, LatticeImageStatus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("subset size {k} outside 1..={m}")]
    SubsetSize { k: usize, m: usize },
    #[error("factor {index} out of range (m = {m})")]
    FactorOutOfRange { index: usize, m: usize },
    #[error("factor {0} repeated in subset")]
    RepeatedFactor(usize),
    #[error("internal invariant violated: {0}")]
    InvariantBreach(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl From<CodeError> for AnalysisError {
    fn from(e: CodeError) -> Self {
        AnalysisError::InvariantBreach(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KTupleStatus {
    pub per_letter: Vec<LatticeImageStatus>,
    /// Status of the full H₁-image inside `ℤ^{r·k}`.
    pub combined: LatticeImageStatus,
}

fn check_subset(model: &SubgroupModel, subset: &[usize]) -> Result<(), AnalysisError> {
    let m = model.m();
    if subset.is_empty() || subset.len() > m {
        return Err(AnalysisError::SubsetSize { k: subset.len(), m });
    }
    for (pos, &c) in subset.iter().enumerate() {
        if c >= m {
            return Err(AnalysisError::FactorOutOfRange { index: c, m });
        }
        if subset[..pos].contains(&c) {
            return Err(AnalysisError::RepeatedFactor(c));
        }
    }
    Ok(())
}

/// Row lattice of block `letter` restricted to the columns in `subset`.
pub fn block_submatrix(model: &SubgroupModel, letter: usize, subset: &[usize]) -> IntMatrix {
    IntMatrix::from_masks(&model.block_rows(letter), subset)
}

fn letter_statuses(model: &SubgroupModel, subset: &[usize]) -> Vec<LatticeImageStatus> {
    (0..model.r())
        .map(|i| lattice_status(&block_submatrix(model, i, subset)))
        .collect()
}

/// Status of the projection onto the factors in `subset` (0-based).
pub fn ktuple_status(model: &SubgroupModel, subset: &[usize]) -> Result<KTupleStatus, AnalysisError> {
    check_subset(model, subset)?;
    let per_letter = letter_statuses(model, subset);
    let combined = LatticeImageStatus::direct_sum(&per_letter, subset.len());
    Ok(KTupleStatus {
        per_letter,
        combined,
    })
}

/// A failing k-subset: its factors (0-based), the first letter whose block
/// fails, and that block's status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub factors: Vec<usize>,
    pub letter: usize,
    pub status: LatticeImageStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownReason {
    TimeBudget,
    AboveMaxK,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum LevelOutcome {
    Decided {
        onto_all: bool,
        virtual_all: bool,
        onto_witness: Option<Witness>,
        virtual_witness: Option<Witness>,
    },
    Unknown {
        reason: UnknownReason,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileLevel {
    pub k: usize,
    #[serde(flatten)]
    pub outcome: LevelOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurjectionProfile {
    pub m: usize,
    /// One entry per k in `2..=m`.
    pub levels: Vec<ProfileLevel>,
}

impl SurjectionProfile {
    pub fn level(&self, k: usize) -> Option<&ProfileLevel> {
        self.levels.iter().find(|l| l.k == k)
    }

    pub fn onto_all(&self, k: usize) -> Option<bool> {
        match &self.level(k)?.outcome {
            LevelOutcome::Decided { onto_all, .. } => Some(*onto_all),
            LevelOutcome::Unknown { .. } => None,
        }
    }

    pub fn virtual_all(&self, k: usize) -> Option<bool> {
        match &self.level(k)?.outcome {
            LevelOutcome::Decided { virtual_all, .. } => Some(*virtual_all),
            LevelOutcome::Unknown { .. } => None,
        }
    }

    pub fn has_unknown(&self, reason: UnknownReason) -> bool {
        self.levels
            .iter()
            .any(|l| l.outcome == LevelOutcome::Unknown { reason: reason.clone() })
    }

    pub fn witnesses(&self) -> impl Iterator<Item = &Witness> {
        self.levels.iter().flat_map(|l| match &l.outcome {
            LevelOutcome::Decided {
                onto_witness,
                virtual_witness,
                ..
            } => onto_witness.iter().chain(virtual_witness.iter()).collect::<Vec<_>>(),
            LevelOutcome::Unknown { .. } => Vec::new(),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProfileOptions {
    /// Levels above this are reported as unknown.
    pub max_k: Option<usize>,
    /// Wall-clock allowance per level; an exhausted level is reported as
    /// unknown.
    pub per_k_budget: Option<Duration>,
}

fn scan_level(model: &SubgroupModel, k: usize, budget: Option<Duration>) -> LevelOutcome {
    let start = Instant::now();
    let mut onto_witness: Option<Witness> = None;
    let mut virtual_witness: Option<Witness> = None;
    let complete = ordered_scan(
        Combinations::new(model.m(), k),
        |subset| letter_statuses(model, subset),
        |subset, statuses| {
            if onto_witness.is_none() {
                if let Some((letter, status)) = statuses.iter().enumerate().find(|(_, s)| !s.is_onto()) {
                    onto_witness = Some(Witness {
                        factors: subset.clone(),
                        letter,
                        status: status.clone(),
                    });
                }
            }
            if let Some((letter, status)) = statuses.iter().enumerate().find(|(_, s)| !s.is_full_rank()) {
                virtual_witness = Some(Witness {
                    factors: subset,
                    letter,
                    status: status.clone(),
                });
                return true;
            }
            false
        },
        || budget.is_none_or(|b| start.elapsed() < b),
    );
    if !complete {
        return LevelOutcome::Unknown {
            reason: UnknownReason::TimeBudget,
        };
    }
    LevelOutcome::Decided {
        onto_all: onto_witness.is_none(),
        virtual_all: virtual_witness.is_none(),
        onto_witness,
        virtual_witness,
    }
}

pub fn surjection_profile(model: &SubgroupModel, options: &ProfileOptions) -> SurjectionProfile {
    let m = model.m();
    let levels = (2..=m)
        .map(|k| {
            let outcome = if options.max_k.is_some_and(|mk| k > mk) {
                LevelOutcome::Unknown {
                    reason: UnknownReason::AboveMaxK,
                }
            } else {
                scan_level(model, k, options.per_k_budget)
            };
            ProfileLevel { k, outcome }
        })
        .collect();
    SurjectionProfile { m, levels }
}

/// Largest `k` such that the finiteness property wFP holds up to `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "k", rename_all = "snake_case")]
pub enum WfpLevel {
    /// wFP_k but not wFP_{k+1}.
    Exactly(usize),
    /// Finite index in the ambient product: wFP_k for every k.
    All,
    /// wFP_k holds; higher levels were not decided.
    AtLeast(usize),
}

impl std::fmt::Display for WfpLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WfpLevel::Exactly(k) => write!(f, "{k}"),
            WfpLevel::All => write!(f, "all"),
            WfpLevel::AtLeast(k) => write!(f, ">= {k}"),
        }
    }
}

pub fn wfp_max(profile: &SurjectionProfile) -> WfpLevel {
    for level in &profile.levels {
        match &level.outcome {
            LevelOutcome::Decided { virtual_all: true, .. } => {}
            LevelOutcome::Decided { virtual_all: false, .. } => return WfpLevel::Exactly(level.k - 1),
            LevelOutcome::Unknown { .. } => return WfpLevel::AtLeast(level.k - 1),
        }
    }
    WfpLevel::All
}

/// Smallest `⌈(m−1)/(k−1)⌉` over the levels surjected on every k-tuple.
pub fn conilpotency_upper(profile: &SurjectionProfile, m: usize) -> Option<usize> {
    profile
        .levels
        .iter()
        .filter(|l| matches!(l.outcome, LevelOutcome::Decided { onto_all: true, .. }))
        .map(|l| (m - 1).div_ceil(l.k - 1))
        .min()
}

pub fn generator_count(model: &SubgroupModel) -> usize {
    let rows: usize = model.arrays().iter().map(|a| a.num_rows()).sum();
    rows + if model.diagonal() { model.r() } else { 0 }
}

/// Rank of the image of the subgroup in `H₁(F^m) = ℤ^{r·m}`.
pub fn h1_rank_lower_bound(model: &SubgroupModel) -> usize {
    let all: Vec<usize> = (0..model.m()).collect();
    (0..model.r())
        .map(|i| rational_rank(&block_submatrix(model, i, &all)))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub profile: ProfileOptions,
    pub weight_cap: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            profile: ProfileOptions::default(),
            weight_cap: DEFAULT_WEIGHT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub m: usize,
    pub r: usize,
    pub generator_count: usize,
    pub h1_rank_lower_bound: usize,
    /// The rank of the subgroup is exactly `generator_count`.
    pub rank_determined: bool,
    pub profile: SurjectionProfile,
    pub wfp_max: WfpLevel,
    /// `γ_c(F^m)` is contained in the subgroup for this `c`.
    pub conilpotency_upper: usize,
    /// Classes below this are excluded for every finite-index `D₀`; `None`
    /// when not evaluated.
    pub conilpotency_excluded: Option<u32>,
    pub codes: Vec<CodeSummary>,
    /// Largest k with every k-tuple surjected mod 2; `None` if the dual
    /// weight exceeded the enumeration cap.
    pub f2_k_bound: Option<usize>,
    pub assumption_notes: Vec<String>,
}

impl AnalysisReport {
    /// The report with everything that depends on factor or letter order
    /// removed: witnesses dropped, code summaries sorted and unlabeled.
    pub fn invariant_view(&self) -> AnalysisReport {
        let mut out = self.clone();
        for level in out.profile.levels.iter_mut() {
            if let LevelOutcome::Decided {
                onto_witness,
                virtual_witness,
                ..
            } = &mut level.outcome
            {
                *onto_witness = None;
                *virtual_witness = None;
            }
        }
        for code in out.codes.iter_mut() {
            code.letter = 0;
        }
        out.codes.sort_by_key(|c| {
            (
                c.length,
                c.dimension,
                c.min_weight,
                c.dual_dimension,
                c.dual_min_weight,
                c.cap_exceeded,
            )
        });
        out
    }
}

const NOTE_H1: &str = "Every pair of factors is surjected, so the subgroup contains the (m-1)st term \
of the lower central series of the ambient product; a k-tuple projection is onto (of finite index) \
exactly when its image in H1 is.";
const NOTE_WFP: &str = "wfp_max is the wFP level when the factors are non-abelian limit groups and \
the markings induce isomorphisms on H1. Under weaker hypotheses the positive statement survives and \
the negative one may fail.";
const NOTE_FP: &str = "Finite presentation and closedness in the profinite topology follow from \
pairwise surjectivity; both are cited, not computed.";
const NOTE_CONIL: &str = "conilpotency_upper is the least ceil((m-1)/(k-1)) over the k with every \
k-tuple surjected. It is an upper bound for the co-nilpotency class, not the class itself.";
const NOTE_EXCLUDED: &str = "conilpotency_excluded uses generator_count as the bound on d(B) and \
assumes each factor maps onto a non-abelian free group: no finite-index D0 has gamma_c(D0) inside \
the subgroup for c below it.";
const NOTE_EXCLUDED_SKIPPED: &str = "conilpotency_excluded is not evaluated: with r = 1 the factors \
are infinite cyclic.";
const NOTE_TORSION: &str = "Pushed into products of groups generated by torsion elements (for \
example free products of Z/2), the subgroup has finite index for every choice of input, so the \
finiteness levels above collapse.";
const NOTE_RANK: &str = "h1_rank_lower_bound is the rank of the image in H1(F^m); the rank of the \
subgroup is only known to be exact when it equals generator_count.";
const NOTE_UNKNOWN: &str = "Some levels were not decided (time budget or max-k); wfp_max is then a \
lower bound.";

/// Assembles the full report for a model.
pub fn analyze(model: &SubgroupModel, options: &AnalysisOptions) -> Result<AnalysisReport, AnalysisError> {
    let m = model.m();
    let r = model.r();
    let profile = surjection_profile(model, &options.profile);
    if profile.onto_all(2) == Some(false) {
        return Err(AnalysisError::InvariantBreach(
            "pairs of factors must be surjected".into(),
        ));
    }
    let count = generator_count(model);
    let lower = h1_rank_lower_bound(model);
    let wfp = wfp_max(&profile);
    // Pairs are always surjected, so an undecided k = 2 still gives m − 1.
    let upper = conilpotency_upper(&profile, m).unwrap_or(m - 1);
    let excluded = if r >= 2 {
        excluded_classes(count as u32, m as u32)?
    } else {
        None
    };
    if let Some(c) = excluded {
        if c as usize > upper {
            return Err(AnalysisError::InvariantBreach(format!(
                "excluded class bound {c} exceeds the guaranteed class {upper}"
            )));
        }
    }
    let codes = (0..r).map(|i| code_summary(model, i, options.weight_cap)).collect();
    let f2_k_bound = match f2_profile(model, options.weight_cap) {
        Ok(p) => Some(p.k_f2),
        Err(CodeError::CapExceeded { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let mut notes = vec![NOTE_H1, NOTE_WFP, NOTE_FP, NOTE_CONIL];
    notes.push(if r >= 2 { NOTE_EXCLUDED } else { NOTE_EXCLUDED_SKIPPED });
    notes.extend([NOTE_TORSION, NOTE_RANK]);
    if matches!(wfp, WfpLevel::AtLeast(_)) {
        notes.push(NOTE_UNKNOWN);
    }
    Ok(AnalysisReport {
        m,
        r,
        generator_count: count,
        h1_rank_lower_bound: lower,
        rank_determined: count == lower,
        profile,
        wfp_max: wfp,
        conilpotency_upper: upper,
        conilpotency_excluded: excluded,
        codes,
        f2_k_bound,
        assumption_notes: notes.into_iter().map(String::from).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigma_model::{builtin_b0, builtin_b1, builtin_b1_diagonal, validate_spec};

    fn model(sigma: Vec<i64>) -> SubgroupModel {
        SubgroupModel::new(validate_spec(&[sigma]).unwrap(), false)
    }

    fn full() -> AnalysisOptions {
        AnalysisOptions::default()
    }

    #[test]
    fn ktuple_examples() {
        let b0 = builtin_b0(18, 2).unwrap();
        assert_eq!(ktuple_status(&b0, &[0, 1]).unwrap().combined, LatticeImageStatus::Onto);
        for m in 3..=10 {
            let b0 = builtin_b0(m, 2).unwrap();
            let s = ktuple_status(&b0, &[0, 1, 2]).unwrap();
            assert!(s
                .per_letter
                .iter()
                .all(|p| *p == LatticeImageStatus::InfiniteIndex { rank: 2 }));
            assert_eq!(s.combined, LatticeImageStatus::InfiniteIndex { rank: 4 });
        }
        for m in 5..=10 {
            let b1 = builtin_b1_diagonal(m, 1).unwrap();
            let s = ktuple_status(&b1, &[1, 2, 3, 4]).unwrap();
            assert_eq!(s.per_letter, vec![LatticeImageStatus::InfiniteIndex { rank: 3 }]);
        }
        assert!(matches!(ktuple_status(&b0, &[0, 18]), Err(AnalysisError::FactorOutOfRange { .. })));
        assert!(matches!(ktuple_status(&b0, &[3, 3]), Err(AnalysisError::RepeatedFactor(3))));
        assert!(matches!(ktuple_status(&b0, &[]), Err(AnalysisError::SubsetSize { .. })));
    }

    #[test]
    fn profile_examples() {
        let p = surjection_profile(&builtin_b0(8, 2).unwrap(), &ProfileOptions::default());
        assert_eq!(p.onto_all(2), Some(true));
        assert_eq!(p.onto_all(3), Some(false));
        match &p.level(3).unwrap().outcome {
            LevelOutcome::Decided { onto_witness, .. } => {
                assert_eq!(onto_witness.as_ref().unwrap().factors, vec![0, 1, 2]);
            }
            other => panic!("unexpected {other:?}"),
        }
        let p = surjection_profile(&builtin_b1_diagonal(4, 1).unwrap(), &ProfileOptions::default());
        assert!((2..=4).all(|k| p.onto_all(k) == Some(true)));

        let p = surjection_profile(&model(vec![7, 11, 13, 14]), &ProfileOptions::default());
        assert_eq!(p.onto_all(4), Some(false));
        assert_eq!(p.virtual_all(4), Some(true));
        match &p.level(4).unwrap().outcome {
            LevelOutcome::Decided { onto_witness, .. } => {
                assert_eq!(onto_witness.as_ref().unwrap().status, LatticeImageStatus::finite_index(3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wfp_and_class_bounds() {
        for m in 5..=9 {
            let b0 = analyze(&builtin_b0(m, 2).unwrap(), &full()).unwrap();
            assert_eq!(b0.wfp_max, WfpLevel::Exactly(2));
            assert_eq!(b0.conilpotency_upper, m - 1);
            let b1 = analyze(&builtin_b1_diagonal(m, 2).unwrap(), &full()).unwrap();
            assert_eq!(b1.wfp_max, WfpLevel::Exactly(3));
            assert_eq!(b1.conilpotency_upper, (m - 1).div_ceil(2));
        }
        let b1 = analyze(&builtin_b1_diagonal(4, 1).unwrap(), &full()).unwrap();
        assert_eq!(b1.wfp_max, WfpLevel::All);
        assert_eq!(b1.conilpotency_upper, 1);
        assert_eq!(b1.conilpotency_excluded, None);
    }

    #[test]
    fn generator_counts() {
        let b0 = builtin_b0(18, 2).unwrap();
        assert_eq!((generator_count(&b0), h1_rank_lower_bound(&b0)), (10, 10));
        let b1 = builtin_b1_diagonal(18, 2).unwrap();
        assert_eq!((generator_count(&b1), h1_rank_lower_bound(&b1)), (12, 12));
        let small = model(vec![1, 3]);
        assert_eq!((generator_count(&small), h1_rank_lower_bound(&small)), (2, 2));
    }

    #[test]
    fn report_rows() {
        let r = analyze(&builtin_b0(18, 2).unwrap(), &full()).unwrap();
        assert_eq!((r.generator_count, r.wfp_max, r.conilpotency_upper), (10, WfpLevel::Exactly(2), 17));
        assert_eq!(r.f2_k_bound, Some(2));
        let r = analyze(&builtin_b1_diagonal(18, 2).unwrap(), &full()).unwrap();
        assert_eq!((r.generator_count, r.wfp_max, r.conilpotency_upper), (12, WfpLevel::Exactly(3), 9));
        assert_eq!(r.conilpotency_excluded, Some(2));
        let r = analyze(&builtin_b1_diagonal(3, 1).unwrap(), &full()).unwrap();
        assert_eq!(r.wfp_max, WfpLevel::All);
    }

    #[test]
    fn odd_sigma_matches_diagonal_form() {
        for m in 2..=12 {
            let a = analyze(&builtin_b1(m, 2).unwrap(), &full()).unwrap();
            let b = analyze(&builtin_b1_diagonal(m, 2).unwrap(), &full()).unwrap();
            assert_eq!(a, b, "m={m}");
        }
    }

    #[test]
    fn max_k_and_budget_leave_unknown_levels() {
        let opts = AnalysisOptions {
            profile: ProfileOptions {
                max_k: Some(3),
                per_k_budget: None,
            },
            ..full()
        };
        let r = analyze(&builtin_b1_diagonal(6, 2).unwrap(), &opts).unwrap();
        assert_eq!(r.wfp_max, WfpLevel::AtLeast(3));
        assert!(r.profile.has_unknown(UnknownReason::AboveMaxK));

        let opts = ProfileOptions {
            max_k: None,
            per_k_budget: Some(Duration::ZERO),
        };
        let p = surjection_profile(&builtin_b0(5, 1).unwrap(), &opts);
        assert!(p.levels.iter().all(|l| l.outcome
            == LevelOutcome::Unknown {
                reason: UnknownReason::TimeBudget
            }));
    }

    #[test]
    fn report_json_round_trip() {
        let r = analyze(&model(vec![7, 11, 13, 14]), &full()).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: AnalysisReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
