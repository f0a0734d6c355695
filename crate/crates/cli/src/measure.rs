//! Reading discrete signed measures from CSV rows `y1,y2,w`.

use std::path::Path;

use flowsde::DiscreteSignedMeasure;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// What was read, reported in the run summary.
#[derive(Debug, Clone, Serialize)]
pub struct IngestReport {
    pub rows: usize,
    pub atoms: usize,
    /// Rows folded into an earlier row at the same location, or pruned.
    pub merged: usize,
    pub total_mass: f64,
    pub total_variation: f64,
}

impl IngestReport {
    pub fn of(measure: &DiscreteSignedMeasure, rows: usize) -> Self {
        Self {
            rows,
            atoms: measure.len(),
            merged: rows - measure.len(),
            total_mass: measure.total_mass(),
            total_variation: measure.total_variation(),
        }
    }
}

/// Rows as read, before merging.
pub type Rows = Vec<[f64; 3]>;

/// Parses CSV text. Blank lines and `#` comments are skipped, and a first
/// non-numeric row is taken as a header. Duplicate locations are merged
/// before the variation norm is computed.
pub fn parse_measure(text: &str) -> CliResult<(DiscreteSignedMeasure, IngestReport, Rows)> {
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    let mut errors = Vec::new();
    let mut seen_data = false;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Vec<Option<f64>> = fields.iter().map(|f| f.parse::<f64>().ok()).collect();
        if !seen_data && parsed.iter().all(Option::is_none) {
            seen_data = true;
            continue;
        }
        seen_data = true;
        if fields.len() != 3 {
            errors.push(format!("line {lineno}: expected 3 columns y1,y2,w, found {}", fields.len()));
            continue;
        }
        match (parsed[0], parsed[1], parsed[2]) {
            (Some(y1), Some(y2), Some(w)) if y1.is_finite() && y2.is_finite() && w.is_finite() => {
                atoms.push([y1, y2]);
                weights.push(w);
            }
            _ => errors.push(format!("line {lineno}: could not read finite numbers from `{line}`")),
        }
    }
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    let rows: Rows = atoms.iter().zip(&weights).map(|(y, w)| [y[0], y[1], *w]).collect();
    let measure = DiscreteSignedMeasure::new(atoms, weights)?;
    let report = IngestReport::of(&measure, rows.len());
    Ok((measure, report, rows))
}

pub fn measure_ingest(path: &Path) -> CliResult<(DiscreteSignedMeasure, IngestReport, Rows)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("measure file {}: {e}", path.display())))?;
    parse_measure(&text).map_err(|e| e.context(&format!("measure file {}", path.display())))
}
