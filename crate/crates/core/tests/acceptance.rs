//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed. The
//! process fails if any criterion fails, except for mismatches listed in
//! `KNOWN_MISMATCHES`, which are still printed as FAIL.

mod common;

use std::time::Instant;

use binsub_core::f2codes::{code_summary, f2_profile, DEFAULT_WEIGHT_CAP};
use binsub_core::nilpotent_numerics::{excluded_classes, hirsch, max_m_for, poly_pc, witt};
use binsub_core::projection_analysis::{
    analyze, generator_count, h1_rank_lower_bound, ktuple_status, AnalysisOptions, AnalysisReport, WfpLevel,
};
use binsub_core::search::{self, SearchMode, SearchQuery, Surjectivity};
use binsub_core::sigma_model::{
    build_array, builtin_b0, builtin_b1_diagonal, canonicalize, row_merge, validate_spec, SubgroupModel,
};
use binsub_core::zlattice::{
    lattice_status, minor_gcd_oracle, rank_f2_masks, IntMatrix, LatticeImageStatus, DEFAULT_MINOR_CAP,
};
use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_counts, lyndon_count, random_binary, random_model};

/// `(criterion, check)` pairs expected to fail. At m = 4 the B₁ model
/// surjects every 4-tuple, so the smallest `⌈(m−1)/(k−1)⌉` over surjected
/// levels is 1, not `⌈(m−1)/2⌉ = 2`; the two stated requirements cannot
/// both hold.
const KNOWN_MISMATCHES: &[(&str, &str)] = &[("2", "(4) m=4")];

struct Outcome {
    id: &'static str,
    title: &'static str,
    mismatches: Vec<String>,
    seconds: f64,
}

fn check(id: &'static str, title: &'static str, f: impl FnOnce(&mut Vec<String>)) -> Outcome {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    f(&mut mismatches);
    Outcome {
        id,
        title,
        mismatches,
        seconds: start.elapsed().as_secs_f64(),
    }
}

macro_rules! expect {
    ($out:expr, $cond:expr, $($fmt:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            $out.push(format!($($fmt)+));
        }
    };
}

fn full(model: &SubgroupModel) -> AnalysisReport {
    analyze(model, &AnalysisOptions::default()).expect("analysis succeeds")
}

fn criterion_1(out: &mut Vec<String>) {
    let table: [[u8; 18]; 5] = [
        [1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0],
        [0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1],
        [0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1],
    ];
    let sigma: Vec<u64> = (1..=18).collect();
    let got = build_array(&sigma).to_rows();
    let want: Vec<Vec<u8>> = table.iter().map(|r| r.to_vec()).collect();
    expect!(out, got == want, "array differs: {got:?}");
}

fn ilog2(m: usize) -> usize {
    (usize::BITS - 1 - m.leading_zeros()) as usize
}

fn criterion_2(out: &mut Vec<String>) {
    let start = Instant::now();
    for m in 3..=20 {
        let b0 = builtin_b0(m, 2).unwrap();
        let b1 = builtin_b1_diagonal(m, 2).unwrap();
        let (g0, g1) = (generator_count(&b0), generator_count(&b1));
        expect!(out, g0 == 2 * (1 + ilog2(m)), "(1) m={m}: generator_count(B0) = {g0}");
        expect!(out, g0 == h1_rank_lower_bound(&b0), "(1) m={m}: lower bound differs");
        expect!(out, g1 == 2 * (2 + ilog2(m)), "(2) m={m}: generator_count(B1) = {g1}");
        expect!(out, g1 == h1_rank_lower_bound(&b1), "(2) m={m}: lower bound differs");
        let r0 = full(&b0);
        let r1 = full(&b1);
        expect!(out, r0.conilpotency_upper == m - 1, "(3) m={m}: got {}", r0.conilpotency_upper);
        let want = (m - 1).div_ceil(2);
        expect!(out, r1.conilpotency_upper == want, "(4) m={m}");
        expect!(out, r0.wfp_max == WfpLevel::Exactly(2), "(5) m={m}: got {}", r0.wfp_max);
        if m <= 4 {
            let all_onto = (2..=m).all(|k| r1.profile.onto_all(k) == Some(true));
            expect!(out, all_onto, "(6) m={m}: some level not onto");
            let s = ktuple_status(&b1, &(0..m).collect::<Vec<_>>()).unwrap();
            expect!(out, s.combined.is_onto(), "(6) m={m}: full tuple {}", s.combined);
        } else {
            expect!(out, r1.wfp_max == WfpLevel::Exactly(3), "(7) m={m}: got {}", r1.wfp_max);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    expect!(out, secs <= 60.0, "runtime {secs:.1}s over 60s");
}

fn criterion_3(out: &mut Vec<String>) {
    for m in 16..=20u32 {
        let model = builtin_b1_diagonal(m as usize, 2).unwrap();
        let d = generator_count(&model) as u32;
        let c = excluded_classes(d, m).unwrap();
        expect!(out, c.is_some_and(|c| c >= 2), "m={m}: excluded_classes({d}, {m}) = {c:?}");
        let Some(c) = c else { continue };
        let big_m = BigInt::from(m);
        // m fits at the reported class and not below it.
        expect!(out, big_m <= max_m_for(d, c).unwrap(), "m={m}: does not fit at c={c}");
        for below in 1..c {
            expect!(out, big_m > max_m_for(d, below).unwrap(), "m={m}: fits at c={below}");
        }
        for cc in 1..=c {
            // exact: h(d,c)/W_c(2) ≤ p_c(d), the polynomial bound
            let h = BigRational::from_integer(hirsch(d, cc).unwrap());
            let w = BigRational::from_integer(witt(cc, 2).unwrap());
            let pc = poly_pc(cc, &BigRational::from_integer(BigInt::from(d))).unwrap();
            expect!(out, h / w <= pc, "m={m}, c={cc}: h/W exceeds p_c");
        }
        let report = full(&model);
        expect!(out, report.conilpotency_excluded == Some(c), "m={m}: report disagrees");
    }
}

/// Largest k with every k-tuple onto mod 2, read off odd k×k minors.
fn brute_k_f2(model: &SubgroupModel) -> usize {
    let m = model.m();
    let rows = model.block_rows(0);
    let mut best = 1;
    for k in 2..=m {
        let all = (0..m).combinations(k).all(|s| {
            let status = minor_gcd_oracle(&IntMatrix::from_masks(&rows, &s), DEFAULT_MINOR_CAP).unwrap();
            status.index().is_some_and(|i| i.is_odd())
        });
        if !all {
            break;
        }
        best = k;
    }
    best
}

fn criterion_4(out: &mut Vec<String>) {
    for m in 5..=20 {
        for (name, model, want) in [
            ("C0", builtin_b0(m, 1).unwrap(), 3),
            ("C1", builtin_b1_diagonal(m, 1).unwrap(), 4),
        ] {
            let s = code_summary(&model, 0, DEFAULT_WEIGHT_CAP);
            expect!(out, s.dual_min_weight == Some(want), "{name}({m}): dual weight {:?}", s.dual_min_weight);
            match f2_profile(&model, DEFAULT_WEIGHT_CAP) {
                Ok(p) => {
                    expect!(out, p.k_f2 == want - 1, "{name}({m}): k_f2 = {}", p.k_f2);
                    expect!(out, p.max_onto_k == p.k_f2, "{name}({m}): profile and weight differ");
                    if m <= 12 {
                        let b = brute_k_f2(&model);
                        expect!(out, b == p.k_f2, "{name}({m}): brute force gives {b}");
                    }
                }
                Err(e) => out.push(format!("{name}({m}): {e}")),
            }
        }
    }
}

fn criterion_5(out: &mut Vec<String>) {
    let model = SubgroupModel::new(validate_spec(&[vec![7, 11, 13, 14]]).unwrap(), false);
    let all = [0, 1, 2, 3];
    let s = ktuple_status(&model, &all).unwrap();
    let three = LatticeImageStatus::finite_index(3);
    expect!(out, s.combined == three, "combined status {}", s.combined);
    let rows = model.block_rows(0);
    expect!(out, rank_f2_masks(rows.iter().copied()) == 4, "not F2-onto");
    let oracle = minor_gcd_oracle(&IntMatrix::from_masks(&rows, &all), 8).unwrap();
    expect!(out, oracle == three, "oracle gives {oracle}");
}

fn criterion_6(out: &mut Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut disagreements = 0;
    for _ in 0..10_000 {
        let rows = rng.gen_range(1..=8);
        let cols = rng.gen_range(1..=8);
        let m = random_binary(&mut rng, rows, cols);
        if lattice_status(&m) != minor_gcd_oracle(&m, DEFAULT_MINOR_CAP).unwrap() {
            disagreements += 1;
        }
    }
    expect!(out, disagreements == 0, "{disagreements} of 10000 matrices disagree");
    for n in 1..=14 {
        let w = witt(n as u32, 2).unwrap();
        let l = lyndon_count(n, 2);
        expect!(out, w == BigInt::from(l), "W_{n}(2) = {w}, Lyndon words {l}");
    }
    for k in 1..=6u32 {
        for n in 1..=12u32 {
            let sum: BigInt = (1..=n)
                .filter(|d| n % d == 0)
                .map(|d| BigInt::from(d) * witt(d, k).unwrap())
                .sum();
            expect!(out, sum == BigInt::from(k).pow(n), "necklace identity fails at k={k}, n={n}");
        }
    }
}

fn criterion_7(out: &mut Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..200 {
        let model = random_model(&mut rng, 12, 3);
        let report = full(&model);
        expect!(out, report.profile.onto_all(2) == Some(true), "trial {trial}: a pair is not surjected");

        let canon = SubgroupModel::new(canonicalize(model.spec()), model.diagonal());
        let rc = full(&canon);
        expect!(
            out,
            rc.invariant_view() == report.invariant_view(),
            "trial {trial}: canonicalize changes the report"
        );

        let letter = rng.gen_range(0..model.r());
        let rows = model.arrays()[letter].num_rows();
        if rows >= 2 {
            let (a, b) = (rng.gen_range(0..rows), rng.gen_range(0..rows));
            if a != b {
                if let Ok(merged) = row_merge(&model, letter, a, b) {
                    let rm = full(&merged);
                    expect!(out, rm == report, "trial {trial}: row_merge changes the report");
                }
            }
        }

        // Mod-2 necessity: onto over ℤ implies onto over F₂, per subset.
        let m = model.m();
        for k in 2..=m.min(5) {
            for subset in (0..m).combinations(k) {
                for i in 0..model.r() {
                    let block = model.block_rows(i);
                    let z = lattice_status(&IntMatrix::from_masks(&block, &subset));
                    let mask = subset.iter().fold(0u64, |acc, &c| acc | 1 << c);
                    let f2 = rank_f2_masks(block.iter().map(|&r| r & mask)) == k;
                    expect!(out, !z.is_onto() || f2, "trial {trial}: onto over Z but not F2 at {subset:?}");
                }
            }
        }
    }
}

const MODES: [Surjectivity; 3] = [Surjectivity::OverZ, Surjectivity::OverF2, Surjectivity::VirtualOverZ];

fn criterion_8(out: &mut Vec<String>) {
    for m in 2..=6 {
        for k in 2..=m.min(4) {
            for diagonal in [false, true] {
                let mut first_l: [Option<usize>; 3] = [None; 3];
                for l in 1..=4 {
                    let brute = brute_counts(m, l, k, diagonal);
                    for (t, &mode) in MODES.iter().enumerate() {
                        let q = SearchQuery::new(m, k, SearchMode::Count { l })
                            .with_diagonal(diagonal)
                            .with_surjectivity(mode);
                        let got = search::count_sigmas(&q).unwrap();
                        expect!(
                            out,
                            got.count == Some(brute[t]),
                            "count m={m} l={l} k={k} diag={diagonal} {mode:?}: {:?} vs {}",
                            got.count,
                            brute[t]
                        );
                        if brute[t] > 0 && first_l[t].is_none() {
                            first_l[t] = Some(l);
                        }
                    }
                }
                for (t, &mode) in MODES.iter().enumerate() {
                    let q = SearchQuery::new(m, k, SearchMode::MinRows)
                        .with_diagonal(diagonal)
                        .with_surjectivity(mode);
                    let got = search::min_rows(&q).unwrap().optimal_l.unwrap();
                    let ok = match first_l[t] {
                        Some(l) => got == l,
                        None => got > 4,
                    };
                    expect!(out, ok, "min_rows m={m} k={k} diag={diagonal} {mode:?}: {got} vs {:?}", first_l[t]);
                }
            }
        }
    }
    let r = search::min_rows(&SearchQuery::new(4, 2, SearchMode::MinRows)).unwrap();
    expect!(out, r.optimal_l == Some(3), "min_rows(4,2) = {:?}", r.optimal_l);
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn criterion_9(out: &mut Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut models = vec![
        builtin_b0(12, 2).unwrap(),
        builtin_b1_diagonal(12, 2).unwrap(),
        SubgroupModel::new(validate_spec(&[vec![7, 11, 13, 14]]).unwrap(), false),
    ];
    models.extend((0..5).map(|_| random_model(&mut rng, 12, 3)));
    let queries = [
        SearchQuery::new(6, 3, SearchMode::MinRows),
        SearchQuery::new(5, 3, SearchMode::Count { l: 4 }).ordered(),
        SearchQuery::new(4, 4, SearchMode::Enumerate { l: 4, limit: 5 }).with_surjectivity(Surjectivity::VirtualOverZ),
        SearchQuery::new(6, 3, SearchMode::Enumerate { l: 4, limit: 8 }).with_diagonal(true),
    ];
    let run = || {
        let reports: Vec<String> = models
            .iter()
            .map(|m| serde_json::to_string(&full(m)).unwrap())
            .collect();
        let searches: Vec<String> = queries
            .iter()
            .map(|q| serde_json::to_string(&search::run(q).unwrap().without_timing()).unwrap())
            .collect();
        (reports, searches)
    };
    let base = in_pool(1, run);
    for threads in [2, 8] {
        let other = in_pool(threads, run);
        expect!(out, other.0 == base.0, "reports differ with {threads} threads");
        expect!(out, other.1 == base.1, "search results differ with {threads} threads");
    }
}

fn main() {
    let start = Instant::now();
    let outcomes = vec![
        check("1", "binary array for m = 18 matches the expected rows", criterion_1),
        check("2", "B0/B1 sweep over m = 3..20, r = 2", criterion_2),
        check("3", "class exclusion for B1, m = 16..20", criterion_3),
        check("4", "dual weights 3 and 4 and the F2 profile, m = 5..20", criterion_4),
        check("5", "(7,11,13,14): index 3 over Z, onto over F2", criterion_5),
        check("6", "lattice, Witt and necklace oracles", criterion_6),
        check("7", "invariance under canonicalize and row_merge, 200 models", criterion_7),
        check("8", "search against brute force, m <= 6, l <= 4, k <= 4", criterion_8),
        check("9", "identical output with 1, 2 and 8 threads", criterion_9),
    ];
    let mut unexpected = 0;
    for o in &outcomes {
        if o.mismatches.is_empty() {
            println!("PASS  {:>2}  {}  ({:.1}s)", o.id, o.title, o.seconds);
            continue;
        }
        let known = o
            .mismatches
            .iter()
            .all(|msg| KNOWN_MISMATCHES.iter().any(|(id, m)| *id == o.id && msg == m));
        if !known {
            unexpected += 1;
        }
        let tag = if known { " [known]" } else { "" };
        println!(
            "FAIL  {:>2}  {}  ({:.1}s){tag}: {}",
            o.id,
            o.title,
            o.seconds,
            o.mismatches.join("; ")
        );
    }
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
