//! Reading measurement tables from CSV files.
//!
//! Columns are keyed by name, so any column order works: one column per
//! option of the space plus the `performance` column. Binary cells accept
//! `0`/`1` and `false`/`true`. Parsing is all-or-nothing: if any row is
//! malformed, violates a constraint, duplicates a configuration, or has a
//! non-positive measurement, the whole file is rejected and every offending
//! line is reported, so a table never silently loses rows that the error
//! metric's denominator would miss.

use crate::error::Error;
use crate::space::{ConfigurationSpace, MeasurementTable, PERFORMANCE_COLUMN};
use crate::Result;
use std::io::Read;
use std::path::Path;

/// Reads a measurement CSV; the system name is taken from the file stem.
pub fn ingest_measurements(path: &Path, space: &ConfigurationSpace) -> Result<MeasurementTable> {
    let file = std::fs::File::open(path)?;
    let system = path.file_stem().and_then(|s| s.to_str()).unwrap_or("system");
    read_measurements(file, space, system)
}

/// Reads a measurement CSV from any reader under the given system name.
pub fn read_measurements<R: Read>(
    reader: R,
    space: &ConfigurationSpace,
    system: &str,
) -> Result<MeasurementTable> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);

    let mut claimed = vec![false; headers.len()];
    let mut claim = |name: &str| -> Result<usize> {
        let idx = column(name).ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        claimed[idx] = true;
        Ok(idx)
    };
    let bin_cols: Vec<usize> = space
        .binary_options()
        .iter()
        .map(|o| claim(&o.name))
        .collect::<Result<_>>()?;
    let num_cols: Vec<usize> = space
        .numeric_options()
        .iter()
        .map(|o| claim(&o.name))
        .collect::<Result<_>>()?;
    let perf_col = claim(PERFORMANCE_COLUMN)?;
    if let Some(extra) = headers.iter().enumerate().find(|(i, _)| !claimed[*i]) {
        return Err(Error::UnknownOption(extra.1.to_string()));
    }

    let mut table = MeasurementTable::new(system, PERFORMANCE_COLUMN);
    let mut rejects: Vec<(usize, String)> = Vec::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        match parse_row(space, &record, &bin_cols, &num_cols, perf_col) {
            Ok((config, value)) => {
                if let Err(err) = table.insert(config, value) {
                    rejects.push((line, err.to_string()));
                }
            }
            Err(reason) => rejects.push((line, reason)),
        }
    }
    if !rejects.is_empty() {
        return Err(Error::RejectedRows(rejects));
    }
    if table.is_empty() {
        return Err(Error::InvalidInput("measurement file has no data rows".into()));
    }
    Ok(table)
}

fn parse_row(
    space: &ConfigurationSpace,
    record: &csv::StringRecord,
    bin_cols: &[usize],
    num_cols: &[usize],
    perf_col: usize,
) -> std::result::Result<(crate::space::Configuration, f64), String> {
    let field = |idx: usize| record.get(idx).unwrap_or("");
    let mut bin = Vec::with_capacity(bin_cols.len());
    for (&col, opt) in bin_cols.iter().zip(space.binary_options()) {
        match field(col) {
            "0" | "false" => bin.push(false),
            "1" | "true" => bin.push(true),
            other => return Err(format!("column `{}`: `{other}` is not a binary value", opt.name)),
        }
    }
    let mut num = Vec::with_capacity(num_cols.len());
    for (&col, opt) in num_cols.iter().zip(space.numeric_options()) {
        let cell = field(col);
        let value: f64 = cell
            .parse()
            .map_err(|_| format!("column `{}`: `{cell}` is not a number", opt.name))?;
        num.push(value);
    }
    let cell = field(perf_col);
    let value: f64 =
        cell.parse().map_err(|_| format!("`{cell}` is not a performance value"))?;
    if value <= 0.0 || value.is_nan() {
        return Err(format!("performance {value} is not strictly positive"));
    }
    let config = space.configuration(bin, num).map_err(|e| e.to_string())?;
    if !space.is_valid(&config) {
        return Err("configuration violates a constraint".to_string());
    }
    Ok((config, value))
}
