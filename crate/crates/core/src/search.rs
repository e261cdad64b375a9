//! Exhaustive search over single-σ models: the fewest rows that surject every
//! k-tuple, the number of σ that do at a given row count, and the witnesses
//! with the largest k-tuple index.
//!
//! Candidates are strictly increasing sequences of values in `[1, 2^l)`, one
//! representative per column-permutation orbit. A partial sequence is cut as
//! soon as a k-subset of its placed columns fails; only subsets containing
//! the newest column need checking at each step.
//!
//! Work is split into subtrees by the first two values, searched in parallel
//! in fixed-size chunks and merged in sequence order, so counts, witness
//! lists and node counts do not depend on the number of threads.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combos::Combinations;
use crate::projection_analysis::{analyze, AnalysisError, AnalysisOptions, WfpLevel};
use crate::sigma_model::{SigmaSpec, SubgroupModel};
use crate::zlattice::{lattice_status, rank_f2_masks, rational_rank, IntMatrix};

/// Largest row count: σ entries must fit in 63 bits.
pub const MAX_ROWS: usize = 63;

const CHUNK: usize = 64;

/// Per-level analysis allowance for the fallback witness after a timeout.
const FALLBACK_BUDGET: Duration = Duration::from_millis(200);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surjectivity {
    OverZ,
    OverF2,
    VirtualOverZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SearchMode {
    MinRows,
    Count { l: usize },
    Enumerate { l: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchQuery {
    pub m: usize,
    pub target_k: usize,
    pub mode: SearchMode,
    pub diagonal: bool,
    pub surjectivity: Surjectivity,
    /// Count sets of columns rather than ordered lists.
    pub canonical_only: bool,
    #[serde(skip)]
    pub budget: Option<Duration>,
}

impl SearchQuery {
    pub fn new(m: usize, target_k: usize, mode: SearchMode) -> Self {
        SearchQuery {
            m,
            target_k,
            mode,
            diagonal: false,
            surjectivity: Surjectivity::OverZ,
            canonical_only: true,
            budget: None,
        }
    }

    pub fn with_diagonal(mut self, diagonal: bool) -> Self {
        self.diagonal = diagonal;
        self
    }

    pub fn with_surjectivity(mut self, s: Surjectivity) -> Self {
        self.surjectivity = s;
        self
    }

    pub fn with_budget(mut self, budget: Option<Duration>) -> Self {
        self.budget = budget;
        self
    }

    pub fn ordered(mut self) -> Self {
        self.canonical_only = false;
        self
    }

    fn validate(&self) -> Result<(), SearchError> {
        if self.target_k < 2 || self.target_k > self.m {
            return Err(SearchError::InvalidQuery(format!(
                "target k = {} must lie in 2..={}",
                self.target_k, self.m
            )));
        }
        if self.m > 64 {
            return Err(SearchError::InvalidQuery(format!("m = {} exceeds 64", self.m)));
        }
        match self.mode {
            SearchMode::Count { l } | SearchMode::Enumerate { l, .. } if l == 0 || l > MAX_ROWS => Err(
                SearchError::InvalidQuery(format!("l = {l} must lie in 1..={MAX_ROWS}")),
            ),
            _ => Ok(()),
        }
    }
}

/// What a witness's full analysis reports, in brief.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub generator_count: usize,
    pub h1_rank_lower_bound: usize,
    pub wfp_max: WfpLevel,
    pub conilpotency_upper: usize,
    pub f2_k_bound: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchWitness {
    pub sigma: Vec<u64>,
    /// Largest index of the image over the target k-subsets.
    #[serde(with = "crate::decimal")]
    pub max_index: BigUint,
    pub summary: WitnessSummary,
}

impl SearchWitness {
    pub fn model(&self, diagonal: bool) -> SubgroupModel {
        let spec = SigmaSpec::from_unsigned(vec![self.sigma.clone()]).expect("search emits valid σ");
        SubgroupModel::new(spec, diagonal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub query: SearchQuery,
    pub optimal_l: Option<usize>,
    /// Ordered or canonical count, per `query.canonical_only`.
    pub count: Option<u128>,
    pub canonical_count: Option<u128>,
    /// Sorted by decreasing `max_index`, then lexicographically.
    pub witnesses: Vec<SearchWitness>,
    pub nodes_explored: u64,
    /// False when the time budget ran out; values are then best-so-far.
    pub complete: bool,
    pub wall_time_ms: Option<u64>,
}

impl SearchResult {
    pub fn without_timing(mut self) -> Self {
        self.wall_time_ms = None;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("no row count up to {max_l} surjects every {k}-tuple of {m} factors")]
    Infeasible { m: usize, k: usize, max_l: usize },
    #[error("time budget exceeded")]
    TimeBudgetExceeded(Box<SearchResult>),
    #[error("count overflows 128 bits")]
    Overflow,
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// The subset test, specialized to fixed `l`, `k` and surjectivity.
#[derive(Debug, Clone)]
struct Checker {
    l: usize,
    k: usize,
    diagonal: bool,
    surjectivity: Surjectivity,
}

impl Checker {
    fn f2_vector(&self, x: u64) -> u64 {
        if self.diagonal {
            x | (1 << self.l)
        } else {
            x
        }
    }

    fn int_matrix(&self, cols: &[u64]) -> IntMatrix {
        let mut rows: Vec<Vec<i64>> = (0..self.l)
            .map(|j| cols.iter().map(|&x| ((x >> j) & 1) as i64).collect())
            .collect();
        if self.diagonal {
            rows.push(vec![1; cols.len()]);
        }
        IntMatrix::from_rows(cols.len(), &rows)
    }

    fn passes(&self, cols: &[u64]) -> bool {
        let f2_full = rank_f2_masks(cols.iter().map(|&x| self.f2_vector(x))) == cols.len();
        match self.surjectivity {
            Surjectivity::OverF2 => f2_full,
            Surjectivity::OverZ => f2_full && lattice_status(&self.int_matrix(cols)).is_onto(),
            Surjectivity::VirtualOverZ => f2_full || rational_rank(&self.int_matrix(cols)) == cols.len(),
        }
    }

    /// Checks every k-subset of `placed` that contains its last column.
    fn accepts_last(&self, placed: &[u64]) -> bool {
        let p = placed.len() - 1;
        if placed.len() < self.k {
            return true;
        }
        let mut cols = vec![0u64; self.k];
        Combinations::new(p, self.k - 1).all(|subset| {
            for (slot, &i) in cols.iter_mut().zip(&subset) {
                *slot = placed[i];
            }
            cols[self.k - 1] = placed[p];
            self.passes(&cols)
        })
    }

    fn max_index(&self, sigma: &[u64]) -> BigUint {
        if self.surjectivity == Surjectivity::OverZ {
            return BigUint::one();
        }
        Combinations::new(sigma.len(), self.k)
            .filter_map(|subset| {
                let cols: Vec<u64> = subset.iter().map(|&i| sigma[i]).collect();
                lattice_status(&self.int_matrix(&cols)).index()
            })
            .max()
            .unwrap_or_else(BigUint::one)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Goal {
    First,
    All { keep: usize },
}

struct Deadline {
    at: Option<Instant>,
    hit: AtomicBool,
}

impl Deadline {
    fn new(budget: Option<Duration>) -> Self {
        Deadline {
            at: budget.map(|b| Instant::now() + b),
            hit: AtomicBool::new(false),
        }
    }

    fn expired(&self) -> bool {
        if self.hit.load(Ordering::Relaxed) {
            return true;
        }
        if self.at.is_some_and(|t| Instant::now() >= t) {
            self.hit.store(true, Ordering::Relaxed);
            return true;
        }
        false
    }
}

#[derive(Debug, Default)]
struct Tally {
    count: u128,
    nodes: u64,
    /// `(max_index, σ)`, best first.
    found: Vec<(BigUint, Vec<u64>)>,
    stopped: bool,
}

fn witness_order(a: &(BigUint, Vec<u64>), b: &(BigUint, Vec<u64>)) -> std::cmp::Ordering {
    b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1))
}

fn trim(found: &mut Vec<(BigUint, Vec<u64>)>, keep: usize) {
    found.sort_by(witness_order);
    found.truncate(keep);
}

struct Dfs<'a> {
    checker: &'a Checker,
    m: usize,
    top: u64,
    goal: Goal,
    deadline: &'a Deadline,
}

impl Dfs<'_> {
    /// Extends `placed` (already accepted) to full length.
    fn run(&self, placed: &mut Vec<u64>, tally: &mut Tally) -> bool {
        if placed.len() == self.m {
            tally.count += 1;
            match self.goal {
                Goal::First => {
                    tally.found.push((BigUint::one(), placed.clone()));
                    return true;
                }
                Goal::All { keep } => {
                    if keep > 0 {
                        tally.found.push((self.checker.max_index(placed), placed.clone()));
                        if tally.found.len() >= 2 * keep + 256 {
                            trim(&mut tally.found, keep);
                        }
                    }
                }
            }
            return false;
        }
        let remaining = (self.m - placed.len()) as u64;
        let start = placed.last().map_or(1, |&v| v + 1);
        let last = self.top - remaining;
        for v in start..=last {
            if self.deadline.expired() {
                tally.stopped = true;
                return false;
            }
            tally.nodes += 1;
            placed.push(v);
            if self.checker.accepts_last(placed) && self.run(placed, tally) {
                placed.pop();
                return true;
            }
            placed.pop();
            if tally.stopped {
                return false;
            }
        }
        false
    }
}

fn search_level(query: &SearchQuery, l: usize, goal: Goal, deadline: &Deadline) -> Tally {
    let m = query.m;
    let mut tally = Tally::default();
    let top = 1u64 << l; // exclusive bound on values
    if (top - 1) < m as u64 {
        return tally;
    }
    let checker = Checker {
        l,
        k: query.target_k,
        diagonal: query.diagonal,
        surjectivity: query.surjectivity,
    };
    let dfs = Dfs {
        checker: &checker,
        m,
        top,
        goal,
        deadline,
    };

    // Roots: accepted prefixes of length two, in sequence order.
    let depth = m.min(2);
    let mut roots: Vec<Vec<u64>> = vec![Vec::new()];
    for d in 0..depth {
        let mut next = Vec::new();
        for prefix in roots {
            let start = prefix.last().map_or(1, |&v| v + 1);
            let last = top - (m - d) as u64;
            for v in start..=last {
                tally.nodes += 1;
                let mut p = prefix.clone();
                p.push(v);
                if checker.accepts_last(&p) {
                    next.push(p);
                }
            }
        }
        roots = next;
    }

    for chunk in roots.chunks(CHUNK) {
        let results: Vec<Tally> = chunk
            .par_iter()
            .map(|root| {
                let mut t = Tally::default();
                let mut placed = root.clone();
                dfs.run(&mut placed, &mut t);
                if let Goal::All { keep } = goal {
                    trim(&mut t.found, keep);
                }
                t
            })
            .collect();
        for t in results {
            tally.nodes += t.nodes;
            tally.count += t.count;
            tally.found.extend(t.found);
            if t.stopped {
                tally.stopped = true;
            }
            if goal == Goal::First && !tally.found.is_empty() {
                tally.found.truncate(1);
                return tally;
            }
            if tally.stopped {
                return tally;
            }
        }
        if let Goal::All { keep } = goal {
            trim(&mut tally.found, keep);
        }
    }
    tally
}

fn summarize(
    sigma: Vec<u64>,
    max_index: BigUint,
    diagonal: bool,
    budget: Option<Duration>,
) -> Result<SearchWitness, SearchError> {
    let model = SubgroupModel::new(
        SigmaSpec::from_unsigned(vec![sigma.clone()]).expect("search emits valid σ"),
        diagonal,
    );
    let mut options = AnalysisOptions::default();
    options.profile.per_k_budget = budget;
    let report = analyze(&model, &options)?;
    Ok(SearchWitness {
        sigma,
        max_index,
        summary: WitnessSummary {
            generator_count: report.generator_count,
            h1_rank_lower_bound: report.h1_rank_lower_bound,
            wfp_max: report.wfp_max,
            conilpotency_upper: report.conilpotency_upper,
            f2_k_bound: report.f2_k_bound,
        },
    })
}

fn elapsed_ms(start: Instant) -> Option<u64> {
    Some(start.elapsed().as_millis() as u64)
}

fn factorial(m: usize) -> Option<u128> {
    (1..=m as u128).try_fold(1u128, |acc, i| acc.checked_mul(i))
}

/// Smallest row count for which some σ meets the target on all k-tuples.
pub fn min_rows(query: &SearchQuery) -> Result<SearchResult, SearchError> {
    query.validate()?;
    let start = Instant::now();
    let deadline = Deadline::new(query.budget);
    let m = query.m;
    let first_l = (usize::BITS - m.leading_zeros()) as usize; // ⌈log₂(m+1)⌉
    let max_l = m.min(MAX_ROWS);
    let mut nodes = 0u64;
    for l in first_l..=max_l {
        let tally = search_level(query, l, Goal::First, &deadline);
        nodes += tally.nodes;
        if let Some((idx, sigma)) = tally.found.into_iter().next() {
            let witness = summarize(sigma, idx, query.diagonal, None)?;
            return Ok(SearchResult {
                query: query.clone(),
                optimal_l: Some(l),
                count: None,
                canonical_count: None,
                witnesses: vec![witness],
                nodes_explored: nodes,
                complete: true,
                wall_time_ms: elapsed_ms(start),
            });
        }
        if tally.stopped {
            // Free columns always work; report them as the fallback.
            let mut witnesses = Vec::new();
            if m <= MAX_ROWS {
                let powers: Vec<u64> = (0..m).map(|i| 1u64 << i).collect();
                witnesses.push(summarize(powers, BigUint::one(), query.diagonal, Some(FALLBACK_BUDGET))?);
            }
            return Err(SearchError::TimeBudgetExceeded(Box::new(SearchResult {
                query: query.clone(),
                optimal_l: (m <= MAX_ROWS).then_some(m),
                count: None,
                canonical_count: None,
                witnesses,
                nodes_explored: nodes,
                complete: false,
                wall_time_ms: elapsed_ms(start),
            })));
        }
    }
    Err(SearchError::Infeasible {
        m,
        k: query.target_k,
        max_l,
    })
}

fn run_all(query: &SearchQuery, l: usize, keep: usize) -> Result<SearchResult, SearchError> {
    query.validate()?;
    let start = Instant::now();
    let deadline = Deadline::new(query.budget);
    let tally = search_level(query, l, Goal::All { keep }, &deadline);
    let canonical = tally.count;
    let count = if query.canonical_only {
        Some(canonical)
    } else {
        Some(
            factorial(query.m)
                .and_then(|f| f.checked_mul(canonical))
                .ok_or(SearchError::Overflow)?,
        )
    };
    let witnesses = tally
        .found
        .into_iter()
        .map(|(idx, sigma)| summarize(sigma, idx, query.diagonal, None))
        .collect::<Result<Vec<_>, _>>()?;
    let result = SearchResult {
        query: query.clone(),
        optimal_l: None,
        count,
        canonical_count: Some(canonical),
        witnesses,
        nodes_explored: tally.nodes,
        complete: !tally.stopped,
        wall_time_ms: elapsed_ms(start),
    };
    if tally.stopped {
        Err(SearchError::TimeBudgetExceeded(Box::new(result)))
    } else {
        Ok(result)
    }
}

/// Number of σ with `l`-bit values meeting the target.
pub fn count_sigmas(query: &SearchQuery) -> Result<SearchResult, SearchError> {
    match query.mode {
        SearchMode::Count { l } => run_all(query, l, 0),
        _ => Err(SearchError::InvalidQuery("count_sigmas needs count mode".into())),
    }
}

/// Up to `limit` witnesses at `l` rows, largest k-tuple index first, plus
/// the total count.
pub fn enumerate_extremal(query: &SearchQuery) -> Result<SearchResult, SearchError> {
    match query.mode {
        SearchMode::Enumerate { l, limit } => run_all(query, l, limit),
        _ => Err(SearchError::InvalidQuery("enumerate_extremal needs enumerate mode".into())),
    }
}

/// Dispatches on the query mode.
pub fn run(query: &SearchQuery) -> Result<SearchResult, SearchError> {
    match query.mode {
        SearchMode::MinRows => min_rows(query),
        SearchMode::Count { .. } => count_sigmas(query),
        SearchMode::Enumerate { .. } => enumerate_extremal(query),
    }
}
