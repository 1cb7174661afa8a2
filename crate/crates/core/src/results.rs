//! Line-oriented result rows for search output.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::CandidateRecord;

pub const SCHEMA_VERSION: u32 = 1;

/// One JSON line per emitted digit set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub schema_version: u32,
    pub k: u32,
    pub b: u32,
    pub digits: Vec<u32>,
    pub estimate: f64,
    /// Certified `H(K(S, b) + 1)`; absent when certification failed.
    pub hsum: Option<f64>,
    pub hsum_error: Option<f64>,
    pub density: f64,
    pub mode: String,
    pub timestamp: String,
}

impl ResultRow {
    pub fn from_record(record: &CandidateRecord, mode: &str, timestamp: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            k: record.k,
            b: record.base(),
            digits: record.digits.members().to_vec(),
            estimate: record.estimate,
            hsum: record.certified.map(|c| c.value),
            hsum_error: record.certified.map(|c| c.error_bound),
            density: record.density,
            mode: mode.to_owned(),
            timestamp: timestamp.to_owned(),
        }
    }

    pub fn write_line(&self, out: &mut impl Write) -> Result<()> {
        let line = serde_json::to_string(self).map_err(|e| Error::Row(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::Io(e.to_string()))
    }
}

/// Parses JSON lines, skipping blank ones. Errors name the offending line.
pub fn read_rows(input: impl BufRead) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Io(format!("line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: ResultRow = serde_json::from_str(&line).map_err(|e| Error::Row(format!("line {}: {e}", i + 1)))?;
        if row.schema_version != SCHEMA_VERSION {
            return Err(Error::Row(format!(
                "line {}: unsupported schema version {}",
                i + 1,
                row.schema_version
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}
