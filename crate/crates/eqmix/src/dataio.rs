//! Reading numeric samples from text files and writing them back canonically.
//!
//! Two input formats: whitespace-delimited tokens (any number per line) and
//! RFC-4180 CSV with a chosen column. Written values use 17 significant
//! digits, enough for every f64 to round-trip exactly.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sample::Sample;

/// Which CSV column holds the data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CsvColumn {
    /// Zero-based position.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
}

impl FromStr for CsvColumn {
    type Err = Error;

    /// A bare integer selects by position, anything else by header name.
    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Config("csv column selector is empty".into()));
        }
        match s.parse::<usize>() {
            Ok(index) => Ok(CsvColumn::Index(index)),
            Err(_) => Ok(CsvColumn::Name(s.to_string())),
        }
    }
}

impl fmt::Display for CsvColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CsvColumn::Index(i) => write!(f, "{i}"),
            CsvColumn::Name(name) => f.write_str(name),
        }
    }
}

/// Input file layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataFormat {
    /// Whitespace-delimited numbers, blank lines skipped.
    Whitespace,
    /// CSV, reading the selected column.
    Csv(CsvColumn),
}

fn parse_token(token: &str, line: usize) -> Result<f64> {
    let value: f64 = token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {token:?} as a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite value {token:?}"),
        });
    }
    Ok(value)
}

fn parse_whitespace(contents: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (i, line) in contents.lines().enumerate() {
        let line_no = i + 1;
        for token in line.split_whitespace() {
            values.push(parse_token(token, line_no)?);
        }
    }
    Ok(values)
}

fn parse_csv(contents: &str, column: &CsvColumn) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(contents.as_bytes());

    let records: Vec<csv::StringRecord> = reader
        .records()
        .collect::<std::result::Result<_, _>>()?;
    let line_of = |record: &csv::StringRecord| -> usize {
        record.position().map(|p| p.line() as usize).unwrap_or(0)
    };

    // Resolve the column and find where data starts.
    let (index, start) = match column {
        CsvColumn::Name(name) => {
            let header = records.first().ok_or(Error::EmptyInput)?;
            let index = header.iter().position(|field| field == name).ok_or_else(|| Error::Parse {
                line: line_of(header),
                message: format!(
                    "no column named {name:?}; header has: {}",
                    header.iter().collect::<Vec<_>>().join(", ")
                ),
            })?;
            (index, 1)
        }
        CsvColumn::Index(index) => {
            // Tolerate a header row: if the very first record does not parse
            // in the selected column but later records exist, skip it.
            let start = match records.first() {
                Some(first)
                    if records.len() > 1
                        && first
                            .get(*index)
                            .is_some_and(|field| field.parse::<f64>().is_err()) =>
                {
                    1
                }
                _ => 0,
            };
            (*index, start)
        }
    };

    let mut values = Vec::new();
    for record in &records[start.min(records.len())..] {
        if record.iter().all(str::is_empty) {
            continue;
        }
        let line = line_of(record);
        let field = record.get(index).ok_or_else(|| Error::Parse {
            line,
            message: format!("row has {} fields, column {index} requested", record.len()),
        })?;
        values.push(parse_token(field, line)?);
    }
    Ok(values)
}

/// Reads a numeric sample from `path` in the given format.
///
/// Values keep file order. Unparseable or non-finite tokens abort with the
/// offending line number; a file with no values is an empty-input error.
pub fn parse_data_file(path: &Path, format: &DataFormat) -> Result<Sample> {
    let contents = std::fs::read_to_string(path)?;
    parse_data_str(&contents, format)
}

/// In-memory variant of [`parse_data_file`].
pub fn parse_data_str(contents: &str, format: &DataFormat) -> Result<Sample> {
    let values = match format {
        DataFormat::Whitespace => parse_whitespace(contents)?,
        DataFormat::Csv(column) => parse_csv(contents, column)?,
    };
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    Sample::new(values)
}

/// Canonical decimal form: 17 significant digits, which round-trips any f64.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes one value per line in canonical form.
pub fn write_sample(sample: &Sample, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(sample.len() * 24);
    for &x in sample.values() {
        out.push_str(&format_value(x));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
