//! CSV datasets and atomic file output.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use tempfile::NamedTempFile;

use crate::error::CliError;

pub const LABEL_COLUMN: &str = "label";

/// Numeric table with an optional pass-through label column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(header: Vec<String>, rows: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> Self {
        Dataset {
            header,
            rows,
            labels,
        }
    }

    pub fn width(&self) -> usize {
        self.header.len()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.header.clone();
        if self.labels.is_some() {
            header.push(LABEL_COLUMN.to_string());
        }
        w.write_record(&header).map_err(csv_err)?;
        for (i, row) in self.rows.iter().enumerate() {
            // `Display` for f64 prints the shortest string that parses back exactly
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            if let Some(labels) = &self.labels {
                rec.push(labels[i].clone());
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.into_inner()
            .map_err(|e| CliError::Data(format!("csv: {e}")))
    }

    pub fn from_csv(bytes: &[u8], source: &str) -> Result<Self, CliError> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(bytes);
        let all: Vec<String> = r
            .headers()
            .map_err(|e| CliError::Data(format!("{source}: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let label_at = all.iter().position(|h| h == LABEL_COLUMN);
        let header: Vec<String> = all
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_at)
            .map(|(_, h)| h.clone())
            .collect();
        if header.is_empty() {
            return Err(CliError::Data(format!("{source}: no numeric columns")));
        }

        let mut rows = Vec::new();
        let mut labels = label_at.map(|_| Vec::new());
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| CliError::Data(format!("{source}: {e}")))?;
            let row_no = line + 2;
            if rec.len() != all.len() {
                return Err(CliError::Data(format!(
                    "{source}: row {row_no} has {} fields, header has {}",
                    rec.len(),
                    all.len()
                )));
            }
            let mut row = Vec::with_capacity(header.len());
            for (i, field) in rec.iter().enumerate() {
                if Some(i) == label_at {
                    if let Some(l) = labels.as_mut() {
                        l.push(field.to_string());
                    }
                    continue;
                }
                let v: f64 = field.parse().map_err(|_| {
                    CliError::Data(format!("{source}: row {row_no}: '{field}' is not a number"))
                })?;
                if !v.is_finite() {
                    return Err(CliError::Data(format!(
                        "{source}: row {row_no}: non-finite value '{field}'"
                    )));
                }
                row.push(v);
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(CliError::Data(format!("{source}: no data rows")));
        }
        Ok(Dataset {
            header,
            rows,
            labels,
        })
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Data(format!("csv: {e}"))
}

pub fn column_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Reads a file, or standard input for `-`.
pub fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| CliError::Data(format!("stdin: {e}")))?;
        return Ok(buf);
    }
    fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file in the target directory and renames it
/// into place. `None` writes to standard output.
pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    let Some(path) = path else {
        let mut out = io::stdout().lock();
        return out
            .write_all(bytes)
            .and_then(|_| out.flush())
            .map_err(|e| CliError::Data(format!("stdout: {e}")));
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: io::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut tmp = NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.flush().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}
