//! Plain-text rendering. Factors and letters are numbered from 1 here; JSON
//! keeps the library's 0-based indices.

use std::fmt::Write;

use binsub_core::f2codes::CodeSummary;
use binsub_core::projection_analysis::{LevelOutcome, UnknownReason, Witness};
use binsub_core::search::SearchMode;

use crate::document::{MatrixDocument, ReportDocument, SearchDocument, TableDocument, WeightsDocument};

fn join<T: ToString>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn witness(w: &Witness) -> String {
    format!(
        "factors {{{}}} letter {}: {}",
        join(w.factors.iter().map(|f| f + 1), ","),
        w.letter + 1,
        w.status
    )
}

fn code_line(c: &CodeSummary) -> String {
    let mut s = format!(
        "letter {}: length {}, dimension {}, min weight {}, dual dimension {}, dual weight {}",
        c.letter + 1,
        c.length,
        c.dimension,
        opt(&c.min_weight),
        c.dual_dimension,
        opt(&c.dual_min_weight)
    );
    if c.cap_exceeded {
        s.push_str(" (weight cap exceeded)");
    }
    s
}

fn sigma_lines(out: &mut String, label: &str, sigmas: &[Vec<u64>]) {
    for (i, s) in sigmas.iter().enumerate() {
        let _ = writeln!(out, "{label}[{}]: {}", i + 1, join(s, ","));
    }
}

pub fn report(doc: &ReportDocument) -> String {
    let r = &doc.report;
    let mut out = String::new();
    let _ = writeln!(out, "r: {}", r.r);
    let _ = writeln!(out, "m: {}", r.m);
    let _ = writeln!(out, "diagonal: {}", doc.input.diagonal);
    sigma_lines(&mut out, "sigma", &doc.input.sigmas);
    let _ = writeln!(out, "generator_count: {}", r.generator_count);
    let _ = writeln!(out, "h1_rank_lower_bound: {}", r.h1_rank_lower_bound);
    let _ = writeln!(out, "rank_determined: {}", r.rank_determined);
    let _ = writeln!(out, "wfp_max: {}", r.wfp_max);
    let _ = writeln!(out, "conilpotency_upper: {}", r.conilpotency_upper);
    let _ = writeln!(out, "conilpotency_excluded: {}", opt(&r.conilpotency_excluded));
    let _ = writeln!(out, "f2_k_bound: {}", opt(&r.f2_k_bound));
    let _ = writeln!(out, "profile:");
    for level in &r.profile.levels {
        let line = match &level.outcome {
            LevelOutcome::Decided {
                onto_all,
                virtual_all,
                onto_witness,
                virtual_witness,
            } => {
                let mut s = format!("onto_all {onto_all}, virtual_all {virtual_all}");
                if let Some(w) = onto_witness {
                    let _ = write!(s, "; first non-onto {}", witness(w));
                }
                if let Some(w) = virtual_witness {
                    let _ = write!(s, "; first infinite-index {}", witness(w));
                }
                s
            }
            LevelOutcome::Unknown { reason } => match reason {
                UnknownReason::TimeBudget => "unknown (time budget)".to_string(),
                UnknownReason::AboveMaxK => "unknown (above max-k)".to_string(),
            },
        };
        let _ = writeln!(out, "  k={}: {line}", level.k);
    }
    let _ = writeln!(out, "codes:");
    for c in &r.codes {
        let _ = writeln!(out, "  {}", code_line(c));
    }
    let _ = writeln!(out, "notes:");
    for n in &r.assumption_notes {
        let _ = writeln!(out, "  - {n}");
    }
    if let Some(t) = &doc.timing {
        let _ = writeln!(out, "wall_time_ms: {} ({} threads)", t.wall_time_ms, t.threads);
    }
    out
}

pub fn search(doc: &SearchDocument) -> String {
    let r = &doc.result;
    let q = &r.query;
    let mut out = String::new();
    let mode = match q.mode {
        SearchMode::MinRows => "min-rows".to_string(),
        SearchMode::Count { l } => format!("count (l = {l})"),
        SearchMode::Enumerate { l, limit } => format!("enumerate (l = {l}, limit {limit})"),
    };
    let _ = writeln!(out, "mode: {mode}");
    let _ = writeln!(out, "m: {}", q.m);
    let _ = writeln!(out, "k: {}", q.target_k);
    let _ = writeln!(out, "surjectivity: {:?}", q.surjectivity);
    let _ = writeln!(out, "diagonal: {}", q.diagonal);
    let _ = writeln!(out, "complete: {}", r.complete);
    if let Some(l) = r.optimal_l {
        let _ = writeln!(out, "optimal_l: {l}");
    }
    if let Some(c) = r.count {
        let label = if q.canonical_only { "count (sets)" } else { "count (ordered)" };
        let _ = writeln!(out, "{label}: {c}");
    }
    let _ = writeln!(out, "nodes_explored: {}", r.nodes_explored);
    let _ = writeln!(out, "witnesses: {}", r.witnesses.len());
    for w in &r.witnesses {
        let s = &w.summary;
        let _ = writeln!(
            out,
            "  {}  max index {}, generators {}, wfp_max {}, conilpotency_upper {}, f2_k_bound {}",
            join(&w.sigma, ","),
            w.max_index,
            s.generator_count,
            s.wfp_max,
            s.conilpotency_upper,
            opt(&s.f2_k_bound)
        );
    }
    if let Some(t) = &doc.timing {
        let _ = writeln!(out, "wall_time_ms: {} ({} threads)", t.wall_time_ms, t.threads);
    }
    out
}

pub fn weights(doc: &WeightsDocument) -> String {
    let mut out = String::new();
    sigma_lines(&mut out, "sigma", &doc.input.sigmas);
    let _ = writeln!(out, "diagonal: {}", doc.input.diagonal);
    for c in &doc.codes {
        let _ = writeln!(out, "{}", code_line(c));
    }
    out
}

pub fn matrix(doc: &MatrixDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sigma: {}", join(&doc.sigma, ","));
    for row in &doc.rows {
        let _ = writeln!(out, "{}", join(row, " "));
    }
    out
}

pub fn table(doc: &TableDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}\t{}", doc.argument, doc.function);
    for (a, v) in &doc.rows {
        let _ = writeln!(out, "{a}\t{v}");
    }
    out
}
