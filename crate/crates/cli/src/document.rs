//! Self-describing output documents.

use binsub_core::f2codes::CodeSummary;
use binsub_core::projection_analysis::AnalysisReport;
use binsub_core::search::SearchResult;
use binsub_core::sigma_model::{canonicalize, SubgroupModel};
use serde::{Deserialize, Serialize};

/// Bumped whenever a document field changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_time_ms: u64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputEcho {
    pub sigmas: Vec<Vec<u64>>,
    /// The same Σ with column and letter order normalized.
    pub canonical_sigmas: Vec<Vec<u64>>,
    pub diagonal: bool,
}

impl InputEcho {
    pub fn of(model: &SubgroupModel) -> Self {
        InputEcho {
            sigmas: model.spec().sigmas().to_vec(),
            canonical_sigmas: canonicalize(model.spec()).sigmas().to_vec(),
            diagonal: model.diagonal(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub kind: String,
    pub input: InputEcho,
    pub report: AnalysisReport,
    pub timing: Option<Timing>,
}

impl ReportDocument {
    pub fn new(model: &SubgroupModel, report: AnalysisReport, timing: Option<Timing>) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            kind: "analysis".into(),
            input: InputEcho::of(model),
            report,
            timing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchDocument {
    pub schema_version: u32,
    pub kind: String,
    pub result: SearchResult,
    pub timing: Option<Timing>,
}

impl SearchDocument {
    pub fn new(result: SearchResult, threads: Option<usize>) -> Self {
        let timing = match (result.wall_time_ms, threads) {
            (Some(ms), Some(t)) => Some(Timing {
                wall_time_ms: ms,
                threads: t,
            }),
            _ => None,
        };
        SearchDocument {
            schema_version: SCHEMA_VERSION,
            kind: "search".into(),
            result,
            timing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightsDocument {
    pub schema_version: u32,
    pub kind: String,
    pub input: InputEcho,
    pub codes: Vec<CodeSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub schema_version: u32,
    pub kind: String,
    pub sigma: Vec<u64>,
    pub rows: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDocument {
    pub schema_version: u32,
    pub kind: String,
    /// Header for the argument column.
    pub argument: String,
    /// Header for the value column.
    pub function: String,
    /// `(argument, value)` with values as exact decimals or fractions.
    pub rows: Vec<(String, String)>,
}
