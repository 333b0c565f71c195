//! CSV ingestion: header row required, comma-delimited, `.` decimal point.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use sgb_core::query::Table;

#[derive(Debug)]
pub enum CsvError {
    Open { path: String, source: std::io::Error },
    Malformed { line: Option<u64>, message: String },
    MissingHeader,
}

impl std::fmt::Display for CsvError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CsvError::Open { path, source } => write!(f, "cannot open {path}: {source}"),
            CsvError::Malformed { line: Some(l), message } => write!(f, "line {l}: {message}"),
            CsvError::Malformed { line: None, message } => f.write_str(message),
            CsvError::MissingHeader => f.write_str("line 1: missing header row"),
        }
    }
}

impl std::error::Error for CsvError {}

fn malformed(e: csv::Error) -> CsvError {
    let line = e.position().map(|p| p.line());
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
        _ => e.to_string(),
    };
    CsvError::Malformed { line, message }
}

/// Cells that do not parse as a number become `None`; only columns a query
/// references must be numeric.
pub fn read_table<R: Read>(reader: R) -> Result<Table, CsvError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(malformed)?.clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(CsvError::MissingHeader);
    }
    let columns: Vec<String> = header.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(malformed)?;
        rows.push(rec.iter().map(|c| c.parse::<f64>().ok()).collect());
    }
    Ok(Table::new(columns, rows))
}

pub fn read_table_path(path: &Path) -> Result<Table, CsvError> {
    let file = File::open(path).map_err(|source| CsvError::Open { path: path.display().to_string(), source })?;
    read_table(file)
}
