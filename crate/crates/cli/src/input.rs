//! σ input files.
//!
//! Text form: one letter per line, entries separated by commas. Blank lines
//! and lines starting with `#` are ignored. A single line may be repeated
//! for `r` letters with `--r`.
//!
//! JSON form (first non-blank character `{`): either
//! `{"sigmas": [[...], ...], "diagonal": bool}` or a search document written
//! by `binsub search`, from which one witness is taken.

use binsub_core::sigma_model::{validate_spec, SigmaError, SigmaSpec};
use serde::Deserialize;

use crate::document::SearchDocument;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaInput {
    pub spec: SigmaSpec,
    /// Set when the input says so; the command-line flag can only add it.
    pub diagonal: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SigmaFile {
    #[serde(default)]
    r: Option<usize>,
    #[serde(default)]
    m: Option<usize>,
    sigmas: Vec<Vec<i64>>,
    #[serde(default)]
    diagonal: bool,
}

pub fn parse_input(text: &str, r: Option<usize>, witness: usize) -> Result<SigmaInput, String> {
    if text.trim_start().starts_with('{') {
        parse_json(text, r, witness)
    } else {
        parse_text(text, r)
    }
}

fn parse_json(text: &str, r: Option<usize>, witness: usize) -> Result<SigmaInput, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if value.get("kind").and_then(|k| k.as_str()) == Some("search") {
        let doc: SearchDocument = serde_json::from_value(value).map_err(|e| e.to_string())?;
        let found = doc.result.witnesses.len();
        let w = doc
            .result
            .witnesses
            .get(witness)
            .ok_or_else(|| format!("witness {witness} requested, document holds {found}"))?;
        let raw: Vec<i64> = w.sigma.iter().map(|&x| x as i64).collect();
        let rows = vec![raw; r.unwrap_or(1)];
        let spec = validate_spec(&rows).map_err(|e| e.to_string())?;
        return Ok(SigmaInput {
            spec,
            diagonal: doc.result.query.diagonal,
        });
    }
    let file: SigmaFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let mut sigmas = file.sigmas;
    let want_r = r.or(file.r);
    if let Some(want) = want_r {
        if sigmas.len() == 1 && want > 1 {
            sigmas = vec![sigmas[0].clone(); want];
        } else if sigmas.len() != want {
            return Err(format!("r = {want} requested, input has {} letters", sigmas.len()));
        }
    }
    let spec = validate_spec(&sigmas).map_err(|e| e.to_string())?;
    if let Some(m) = file.m {
        if m != spec.m() {
            return Err(format!("m = {m} declared, sigmas have {} entries", spec.m()));
        }
    }
    Ok(SigmaInput {
        spec,
        diagonal: file.diagonal,
    })
}

/// 1-based line and column of each entry.
type Positions = Vec<Vec<(usize, usize)>>;

fn parse_text(text: &str, r: Option<usize>) -> Result<SigmaInput, String> {
    let mut rows: Vec<Vec<i64>> = Vec::new();
    let mut positions: Positions = Vec::new();
    let mut lines: Vec<usize> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        let mut pos = Vec::new();
        let mut offset = 0;
        for token in line.split(',') {
            let lead = token.len() - token.trim_start().len();
            let col = offset + lead + 1;
            offset += token.len() + 1;
            let t = token.trim();
            if t.is_empty() {
                return Err(format!("line {}, column {col}: empty entry", ln + 1));
            }
            let v: i64 = t
                .parse()
                .map_err(|_| format!("line {}, column {col}: '{t}' is not an integer", ln + 1))?;
            row.push(v);
            pos.push((ln + 1, col));
        }
        rows.push(row);
        positions.push(pos);
        lines.push(ln + 1);
    }
    if let Some(want) = r {
        if rows.len() == 1 && want > 1 {
            rows = vec![rows[0].clone(); want];
            positions = vec![positions[0].clone(); want];
        } else if rows.len() != want {
            return Err(format!("r = {want} requested, input has {} lines", rows.len()));
        }
    }
    let spec = validate_spec(&rows).map_err(|e| locate(&e, &positions))?;
    Ok(SigmaInput { spec, diagonal: false })
}

fn locate(e: &SigmaError, positions: &Positions) -> String {
    let at = |letter: usize, entry: usize| positions.get(letter).and_then(|p| p.get(entry)).copied();
    let place = match e {
        SigmaError::LengthMismatch { letter, .. } => at(*letter, 0),
        SigmaError::NonPositiveEntry { letter, position, .. } => at(*letter, *position),
        SigmaError::DuplicateEntry { letter, second, .. } => at(*letter, *second),
        SigmaError::TooManyFactors(_) => at(0, 64),
        _ => None,
    };
    match place {
        Some((line, col)) => format!("line {line}, column {col}: {e}"),
        None => e.to_string(),
    }
}

/// Parses a σ given inline, e.g. `1,2,4`.
pub fn parse_inline(arg: &str) -> Result<Vec<i64>, String> {
    arg.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse().map_err(|_| format!("'{t}' is not an integer"))
        })
        .collect()
}

/// Parses a 0/1 matrix, one row per line, entries separated by spaces or
/// commas.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<u8>>, String> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| match t {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                _ => Err(format!("line {}: '{t}' is not 0 or 1", ln + 1)),
            })
            .collect::<Result<Vec<u8>, String>>()?;
        rows.push(row);
    }
    Ok(rows)
}
