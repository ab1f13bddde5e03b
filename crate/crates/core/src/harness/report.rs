//! Result persistence and plot-ready report files.
//!
//! The cells file is a plain CSV with one row per experiment cell plus the
//! system's configuration count, so reports can be re-derived from it alone.
//! `emit_report` writes, per grouping dimension (learner, binary strategy,
//! numeric strategy):
//!
//! * pairwise error-difference matrices, row minus column, so negative
//!   values mean the row's group is more accurate; diagonal entries carry
//!   the raw error;
//! * violin data (every finite cell error per group) with mean and median
//!   summaries;
//! * one-sided Wilcoxon p-values with Cliff's delta and its magnitude;
//! * a Pareto listing over (relative learning-set size, mean error).
//!
//! Every file is generated in deterministic order: rerunning on identical
//! cells yields byte-identical output.

use super::ExperimentRun;
use crate::error::Error;
use crate::evaluation::{cliffs_delta, pareto_front, wilcoxon_one_sided, ExperimentCell, ParetoPoint};
use crate::Result;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

/// The dimension along which cells are grouped for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Learner,
    BinaryStrategy,
    NumericStrategy,
}

impl GroupBy {
    pub const ALL: [GroupBy; 3] = [GroupBy::Learner, GroupBy::BinaryStrategy, GroupBy::NumericStrategy];

    pub fn id(self) -> &'static str {
        match self {
            GroupBy::Learner => "learner",
            GroupBy::BinaryStrategy => "binary",
            GroupBy::NumericStrategy => "numeric",
        }
    }

    fn group(self, cell: &ExperimentCell) -> &str {
        match self {
            GroupBy::Learner => &cell.learner,
            GroupBy::BinaryStrategy => &cell.binary_strategy,
            GroupBy::NumericStrategy => &cell.numeric_strategy,
        }
    }

    /// The varying context a group is compared over: the two other grid
    /// dimensions plus the system.
    fn context(self, cell: &ExperimentCell) -> (&str, &str, &str) {
        match self {
            GroupBy::Learner => (&cell.binary_strategy, &cell.numeric_strategy, &cell.system),
            GroupBy::BinaryStrategy => (&cell.learner, &cell.numeric_strategy, &cell.system),
            GroupBy::NumericStrategy => (&cell.learner, &cell.binary_strategy, &cell.system),
        }
    }

    /// Header names of the two context columns in matrix files.
    fn context_headers(self) -> (&'static str, &'static str) {
        match self {
            GroupBy::Learner => ("binary_strategy", "numeric_strategy"),
            GroupBy::BinaryStrategy => ("learner", "numeric_strategy"),
            GroupBy::NumericStrategy => ("learner", "binary_strategy"),
        }
    }
}

impl std::fmt::Display for GroupBy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

impl std::str::FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GroupBy::ALL.into_iter().find(|g| g.id() == s).ok_or_else(|| {
            Error::InvalidInput(format!(
                "unknown grouping `{s}` (expected learner, binary, or numeric)"
            ))
        })
    }
}

/// Writes one row per cell in the current order, with the system's
/// configuration count so relative sizes can be recomputed later.
/// Per-configuration error lists are not persisted.
pub fn write_cells_csv<W: Write>(run: &ExperimentRun, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "learner",
        "binary_strategy",
        "numeric_strategy",
        "system",
        "system_size",
        "learning_set_size",
        "mean_error",
        "failure",
    ])?;
    for cell in &run.cells {
        let system_size = run.system_sizes.get(&cell.system).copied().ok_or_else(|| {
            Error::InvalidInput(format!("no configuration count recorded for system `{}`", cell.system))
        })?;
        let system_size = system_size.to_string();
        let set_size = cell.learning_set_size.to_string();
        let mean_error = cell.mean_error.to_string();
        w.write_record([
            cell.learner.as_str(),
            cell.binary_strategy.as_str(),
            cell.numeric_strategy.as_str(),
            cell.system.as_str(),
            system_size.as_str(),
            set_size.as_str(),
            mean_error.as_str(),
            cell.failure.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a cells file back; the inverse of [`write_cells_csv`].
pub fn read_cells_csv<R: Read>(reader: R) -> Result<ExperimentRun> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers()?.clone();
    let expected =
        ["learner", "binary_strategy", "numeric_strategy", "system", "system_size", "learning_set_size", "mean_error", "failure"];
    for name in expected {
        if !headers.iter().any(|h| h == name) {
            return Err(Error::MissingColumn(name.to_string()));
        }
    }
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let idx: Vec<usize> = expected.iter().map(|n| col(n)).collect();
    let mut cells = Vec::new();
    let mut system_sizes: BTreeMap<String, usize> = BTreeMap::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| record.get(idx[i]).unwrap_or("").to_string();
        let bad = |what: &str, value: &str| {
            Error::InvalidInput(format!("cells file line {line}: `{value}` is not a {what}"))
        };
        let system_size: usize =
            field(4).parse().map_err(|_| bad("configuration count", &field(4)))?;
        let learning_set_size: usize =
            field(5).parse().map_err(|_| bad("learning-set size", &field(5)))?;
        let mean_error: f64 = field(6).parse().map_err(|_| bad("mean error", &field(6)))?;
        let failure = field(7);
        let cell = if failure.is_empty() {
            ExperimentCell::new(
                field(0),
                field(1),
                field(2),
                field(3),
                learning_set_size,
                mean_error,
                None,
            )?
        } else {
            let mut cell = ExperimentCell::failed(
                field(0),
                field(1),
                field(2),
                field(3),
                learning_set_size,
                failure,
            );
            cell.mean_error = mean_error;
            cell
        };
        if let Some(&known) = system_sizes.get(&cell.system) {
            if known != system_size {
                return Err(Error::InvalidInput(format!(
                    "cells file line {line}: system `{}` listed with sizes {known} and {system_size}",
                    cell.system
                )));
            }
        } else {
            system_sizes.insert(cell.system.clone(), system_size);
        }
        cells.push(cell);
    }
    if cells.is_empty() {
        return Err(Error::InvalidInput("cells file has no data rows".into()));
    }
    Ok(ExperimentRun { cells, system_sizes })
}

/// Error vectors per group, aligned over the contexts (the two other grid
/// dimensions plus the system) in which every group has a finite cell.
/// Groups and contexts are sorted, so the pairing is deterministic.
pub fn paired_error_groups(cells: &[ExperimentCell], by: GroupBy) -> Vec<(String, Vec<f64>)> {
    let mut per_group: BTreeMap<&str, BTreeMap<(&str, &str, &str), f64>> = BTreeMap::new();
    for cell in cells {
        per_group.entry(by.group(cell)).or_default().insert(by.context(cell), cell.mean_error);
    }
    let mut common: Option<BTreeSet<(&str, &str, &str)>> = None;
    for contexts in per_group.values() {
        let finite: BTreeSet<(&str, &str, &str)> = contexts
            .iter()
            .filter(|(_, e)| e.is_finite())
            .map(|(k, _)| *k)
            .collect();
        common = Some(match common {
            None => finite,
            Some(prev) => prev.intersection(&finite).copied().collect(),
        });
    }
    let common = common.unwrap_or_default();
    per_group
        .into_iter()
        .map(|(group, contexts)| {
            let values = common.iter().map(|key| contexts[key]).collect();
            (group.to_string(), values)
        })
        .collect()
}

/// Writes all report files into `out_dir` and returns their paths. See the
/// module documentation for the list.
pub fn emit_report(run: &ExperimentRun, alpha: f64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if run.cells.is_empty() {
        return Err(Error::InvalidInput("no cells to report".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must be in (0, 1), got {alpha}")));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut cells = run.cells.clone();
    cells.sort_by(|a, b| {
        (&a.learner, &a.binary_strategy, &a.numeric_strategy, &a.system)
            .cmp(&(&b.learner, &b.binary_strategy, &b.numeric_strategy, &b.system))
    });

    let mut files = Vec::new();
    for by in GroupBy::ALL {
        let path = out_dir.join(format!("matrix_{}.csv", by.id()));
        write_matrix(&path, &cells, by)?;
        files.push(path);
    }
    let violin = out_dir.join("violin.csv");
    let violin_summary = out_dir.join("violin_summary.csv");
    write_violins(&violin, &violin_summary, &cells)?;
    files.push(violin);
    files.push(violin_summary);

    let pareto = out_dir.join("pareto.csv");
    write_pareto(&pareto, &cells, &run.system_sizes)?;
    files.push(pareto);

    for by in GroupBy::ALL {
        let path = out_dir.join(format!("significance_{}.csv", by.id()));
        write_significance(&path, &cells, by, alpha)?;
        files.push(path);
    }
    Ok(files)
}

/// A matrix cell address: the group plus the two context columns.
type MatrixKey<'a> = (&'a str, (&'a str, &'a str));

/// Mean error per (group, context pair), averaged over systems.
struct MatrixData<'a> {
    groups: BTreeSet<&'a str>,
    inners: BTreeSet<(&'a str, &'a str)>,
    means: BTreeMap<MatrixKey<'a>, f64>,
}

fn matrix_means(cells: &[ExperimentCell], by: GroupBy) -> MatrixData<'_> {
    let mut sums: BTreeMap<MatrixKey<'_>, (f64, usize)> = BTreeMap::new();
    let mut groups = BTreeSet::new();
    let mut inners = BTreeSet::new();
    for cell in cells {
        let group = by.group(cell);
        let (c1, c2, _system) = by.context(cell);
        groups.insert(group);
        inners.insert((c1, c2));
        let entry = sums.entry((group, (c1, c2))).or_insert((0.0, 0));
        entry.0 += cell.mean_error;
        entry.1 += 1;
    }
    let means = sums.into_iter().map(|(key, (sum, n))| (key, sum / n as f64)).collect();
    MatrixData { groups, inners, means }
}

fn write_matrix(path: &Path, cells: &[ExperimentCell], by: GroupBy) -> Result<()> {
    let MatrixData { groups, inners, means } = matrix_means(cells, by);
    let (h1, h2) = by.context_headers();
    let mut w = csv::Writer::from_writer(std::fs::File::create(path)?);
    let row_header = format!("row_{}", by.id());
    let col_header = format!("col_{}", by.id());
    w.write_record([row_header.as_str(), col_header.as_str(), h1, h2, "value"])?;
    for &row in &groups {
        for &col in &groups {
            for &(c1, c2) in &inners {
                let value = if row == col {
                    means.get(&(row, (c1, c2))).copied()
                } else {
                    // A difference against a failed (infinite) group says
                    // nothing; leave the cell blank.
                    match (means.get(&(row, (c1, c2))), means.get(&(col, (c1, c2)))) {
                        (Some(&a), Some(&b)) if (a - b).is_finite() => Some(a - b),
                        _ => None,
                    }
                };
                let text = value.map(|v| v.to_string()).unwrap_or_default();
                w.write_record([row, col, c1, c2, text.as_str()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_violins(long_path: &Path, summary_path: &Path, cells: &[ExperimentCell]) -> Result<()> {
    let mut long = csv::Writer::from_writer(std::fs::File::create(long_path)?);
    long.write_record(["dimension", "group", "mean_error"])?;
    let mut summary = csv::Writer::from_writer(std::fs::File::create(summary_path)?);
    summary.write_record(["dimension", "group", "cells", "failed", "mean", "median"])?;
    for by in GroupBy::ALL {
        let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        let mut failed: BTreeMap<&str, usize> = BTreeMap::new();
        for cell in cells {
            let group = by.group(cell);
            failed.entry(group).or_insert(0);
            if cell.mean_error.is_finite() {
                groups.entry(group).or_default().push(cell.mean_error);
            } else {
                groups.entry(group).or_default();
                *failed.get_mut(group).unwrap() += 1;
            }
        }
        for (&group, values) in &groups {
            for value in values {
                let text = value.to_string();
                long.write_record([by.id(), group, text.as_str()])?;
            }
            let failures = failed[group];
            let total = (values.len() + failures).to_string();
            let failures = failures.to_string();
            let (mean, middle) = if values.is_empty() {
                (String::new(), String::new())
            } else {
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                (mean.to_string(), median(values).to_string())
            };
            summary.write_record([
                by.id(),
                group,
                total.as_str(),
                failures.as_str(),
                mean.as_str(),
                middle.as_str(),
            ])?;
        }
    }
    long.flush()?;
    summary.flush()?;
    Ok(())
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// One Pareto point per fully successful (learner, binary, numeric) combo:
/// learning-set size relative to the system's configuration count and the
/// mean error, both averaged over systems. Combos with any failed cell are
/// left out; they have no defined size/error trade-off.
fn write_pareto(
    path: &Path,
    cells: &[ExperimentCell],
    system_sizes: &BTreeMap<String, usize>,
) -> Result<()> {
    let mut combos: BTreeMap<(&str, &str, &str), Vec<&ExperimentCell>> = BTreeMap::new();
    for cell in cells {
        combos
            .entry((&cell.learner, &cell.binary_strategy, &cell.numeric_strategy))
            .or_default()
            .push(cell);
    }
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for (combo, members) in &combos {
        if members.iter().any(|c| !c.mean_error.is_finite() || c.learning_set_size == 0) {
            continue;
        }
        let mut rel_sum = 0.0;
        for cell in members {
            let size = system_sizes.get(&cell.system).copied().ok_or_else(|| {
                Error::InvalidInput(format!(
                    "no configuration count recorded for system `{}`",
                    cell.system
                ))
            })?;
            rel_sum += cell.learning_set_size as f64 / size as f64;
        }
        let relative_size = rel_sum / members.len() as f64;
        let mean_error =
            members.iter().map(|c| c.mean_error).sum::<f64>() / members.len() as f64;
        let id = format!("{}/{}/{}", combo.0, combo.1, combo.2);
        points.push(ParetoPoint::new(id, relative_size, mean_error)?);
        rows.push((*combo, relative_size, mean_error));
    }
    let front: HashSet<String> = if points.is_empty() {
        HashSet::new()
    } else {
        pareto_front(&points)?.into_iter().map(|p| p.combo).collect()
    };
    let on_front = |combo: &(&str, &str, &str)| {
        front.contains(&format!("{}/{}/{}", combo.0, combo.1, combo.2))
    };
    rows.sort_by(|a, b| {
        (!on_front(&a.0), a.2, a.1, a.0)
            .partial_cmp(&(!on_front(&b.0), b.2, b.1, b.0))
            .expect("pareto rows are finite")
    });
    let mut w = csv::Writer::from_writer(std::fs::File::create(path)?);
    w.write_record([
        "learner",
        "binary_strategy",
        "numeric_strategy",
        "relative_size",
        "mean_error",
        "on_front",
    ])?;
    for (combo, rel, err) in &rows {
        let rel = rel.to_string();
        let err = err.to_string();
        w.write_record([
            combo.0,
            combo.1,
            combo.2,
            rel.as_str(),
            err.as_str(),
            if on_front(combo) { "true" } else { "false" },
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_significance(
    path: &Path,
    cells: &[ExperimentCell],
    by: GroupBy,
    alpha: f64,
) -> Result<()> {
    let groups = paired_error_groups(cells, by);
    let mut w = csv::Writer::from_writer(std::fs::File::create(path)?);
    w.write_record(["row", "col", "contexts", "p_value", "delta", "magnitude", "alpha", "significant"])?;
    for (row_name, row_values) in &groups {
        for (col_name, col_values) in &groups {
            if row_name == col_name || row_values.is_empty() {
                continue;
            }
            let (delta, magnitude) = cliffs_delta(row_values, col_values)?;
            let (p_text, significant) = match wilcoxon_one_sided(row_values, col_values) {
                Ok(outcome) => {
                    let significant = if outcome.p_value < alpha { "true" } else { "false" };
                    (outcome.p_value.to_string(), significant)
                }
                Err(_) => (String::new(), ""),
            };
            let contexts = row_values.len().to_string();
            let delta = delta.to_string();
            let magnitude = magnitude.to_string();
            let alpha = alpha.to_string();
            w.write_record([
                row_name.as_str(),
                col_name.as_str(),
                contexts.as_str(),
                p_text.as_str(),
                delta.as_str(),
                magnitude.as_str(),
                alpha.as_str(),
                significant,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
