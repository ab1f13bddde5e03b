//! Error metrics, stability ranges, significance tests, and Pareto fronts
//! over experiment results.
//!
//! The central quantity is the mean relative error of a predictor over a
//! measurement table. Cells of an experiment grid carry that number per
//! (learner, binary strategy, numeric strategy, system) combination, and
//! the research-question predicates quantify over cells exactly as the
//! formulas state: a winner must be strictly better in every context it
//! is compared in, so ties yield no winner.
//!
//! Significance testing uses the one-sided Wilcoxon signed-rank test on
//! paired error rates, exact up to 25 non-zero differences and normally
//! approximated with tie correction above, plus Cliff's delta for effect
//! size. Reported p-values are raw; no multiple-comparison correction is
//! applied.

use crate::error::Error;
use crate::learners::Predictor;
use crate::space::{Configuration, MeasurementTable};
use crate::Result;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Largest number of non-zero differences for which the signed-rank
/// distribution is enumerated exactly.
pub const EXACT_WILCOXON_LIMIT: usize = 25;

/// One grid cell: the mean error of one learner and sampling-strategy
/// combination on one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub learner: String,
    pub binary_strategy: String,
    pub numeric_strategy: String,
    pub system: String,
    /// Zero only on failed cells where no learning set was assembled.
    pub learning_set_size: usize,
    /// Mean relative error; infinite when the cell failed.
    pub mean_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_config_errors: Option<Vec<f64>>,
    /// Why the cell could not be completed; the error is infinite then.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl ExperimentCell {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        learner: impl Into<String>,
        binary_strategy: impl Into<String>,
        numeric_strategy: impl Into<String>,
        system: impl Into<String>,
        learning_set_size: usize,
        mean_error: f64,
        per_config_errors: Option<Vec<f64>>,
    ) -> Result<Self> {
        if learning_set_size == 0 {
            return Err(Error::InvalidInput("experiment cell needs a non-empty learning set".into()));
        }
        if mean_error < 0.0 || mean_error.is_nan() {
            return Err(Error::InvalidInput(format!(
                "experiment cell mean error must be non-negative, got {mean_error}"
            )));
        }
        Ok(ExperimentCell {
            learner: learner.into(),
            binary_strategy: binary_strategy.into(),
            numeric_strategy: numeric_strategy.into(),
            system: system.into(),
            learning_set_size,
            mean_error,
            per_config_errors,
            failure: None,
        })
    }

    /// Records a cell that could not be completed. `learning_set_size` is
    /// the size that was assembled before the failure, zero when sampling
    /// or pairing itself failed.
    pub fn failed(
        learner: impl Into<String>,
        binary_strategy: impl Into<String>,
        numeric_strategy: impl Into<String>,
        system: impl Into<String>,
        learning_set_size: usize,
        reason: impl Into<String>,
    ) -> Self {
        ExperimentCell {
            learner: learner.into(),
            binary_strategy: binary_strategy.into(),
            numeric_strategy: numeric_strategy.into(),
            system: system.into(),
            learning_set_size,
            mean_error: f64::INFINITY,
            per_config_errors: None,
            failure: Some(reason.into()),
        }
    }
}

/// Relative prediction error of every table row, in table order.
pub fn config_errors(predictor: &Predictor, table: &MeasurementTable) -> Result<Vec<f64>> {
    if table.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate on an empty measurement table".into()));
    }
    table
        .iter()
        .map(|(config, measured)| {
            let predicted = predictor.predict(config)?;
            Ok((predicted - measured).abs() / measured)
        })
        .collect()
}

/// Mean relative error of the predictor over every row of the table,
/// learning-set rows included.
pub fn mean_error(predictor: &Predictor, table: &MeasurementTable) -> Result<f64> {
    let errors = config_errors(predictor, table)?;
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

/// [`mean_error`] restricted to rows whose configuration is not in
/// `learning`, for sensitivity studies on held-out data only.
pub fn mean_error_excluding(
    predictor: &Predictor,
    table: &MeasurementTable,
    learning: &[Configuration],
) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for (config, measured) in table.iter() {
        if learning.contains(config) {
            continue;
        }
        total += (predictor.predict(config)? - measured).abs() / measured;
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidInput(
            "every table row is in the learning set; nothing left to evaluate".into(),
        ));
    }
    Ok(total / count as f64)
}

/// Spread of mean errors within one group of cells.
///
/// A group containing a failed (infinite) cell is maximally unstable and
/// reports an infinite range.
pub fn stability_range(cells: &[ExperimentCell]) -> Result<f64> {
    if cells.is_empty() {
        return Err(Error::InvalidInput("stability range of an empty group".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for c in cells {
        lo = lo.min(c.mean_error);
        hi = hi.max(c.mean_error);
    }
    Ok(if hi.is_infinite() { f64::INFINITY } else { hi - lo })
}

// ---- research-question predicates ----

/// Winner of a strict all-contexts comparison: the candidate whose error
/// beats every competitor inside every context both appear in. `None`
/// when no candidate is strictly better everywhere.
fn superior<K, C>(
    cells: &[ExperimentCell],
    candidate: impl Fn(&ExperimentCell) -> K,
    context: impl Fn(&ExperimentCell) -> C,
) -> Option<K>
where
    K: Ord + Clone,
    C: Ord,
{
    let mut groups: BTreeMap<C, Vec<(K, f64)>> = BTreeMap::new();
    let mut candidates: BTreeSet<K> = BTreeSet::new();
    for cell in cells {
        let k = candidate(cell);
        candidates.insert(k.clone());
        groups.entry(context(cell)).or_default().push((k, cell.mean_error));
    }
    'candidate: for k in &candidates {
        let mut compared = false;
        for group in groups.values() {
            let mine: Vec<f64> =
                group.iter().filter(|(j, _)| j == k).map(|(_, e)| *e).collect();
            if mine.is_empty() {
                continue;
            }
            for (j, theirs) in group {
                if j == k {
                    continue;
                }
                compared = true;
                if !mine.iter().all(|m| m < theirs) {
                    continue 'candidate;
                }
            }
        }
        if compared {
            return Some(k.clone());
        }
    }
    None
}

/// Winner of a strict stability comparison: the candidate whose error
/// range within each system beats every competitor's range on the same
/// system.
fn most_stable<K>(cells: &[ExperimentCell], candidate: impl Fn(&ExperimentCell) -> K) -> Option<K>
where
    K: Ord + Clone,
{
    let mut spans: BTreeMap<(K, &str), (f64, f64)> = BTreeMap::new();
    for cell in cells {
        let entry = spans
            .entry((candidate(cell), cell.system.as_str()))
            .or_insert((f64::INFINITY, 0.0));
        entry.0 = entry.0.min(cell.mean_error);
        entry.1 = entry.1.max(cell.mean_error);
    }
    let range = |(lo, hi): (f64, f64)| if hi.is_infinite() { f64::INFINITY } else { hi - lo };
    let mut ranges: BTreeMap<&str, Vec<(K, f64)>> = BTreeMap::new();
    for ((k, system), span) in &spans {
        ranges.entry(system).or_default().push((k.clone(), range(*span)));
    }
    let candidates: BTreeSet<K> = spans.keys().map(|(k, _)| k.clone()).collect();
    'candidate: for k in &candidates {
        let mut compared = false;
        for group in ranges.values() {
            let Some(mine) = group.iter().find(|(j, _)| j == k).map(|(_, r)| *r) else {
                continue;
            };
            for (j, theirs) in group {
                if j == k {
                    continue;
                }
                compared = true;
                if mine.partial_cmp(theirs) != Some(std::cmp::Ordering::Less) {
                    continue 'candidate;
                }
            }
        }
        if compared {
            return Some(k.clone());
        }
    }
    None
}

/// A learning technique strictly better than all others in every
/// (binary strategy, numeric strategy, system) context.
pub fn rq1_1_superior_learner(cells: &[ExperimentCell]) -> Option<String> {
    superior(
        cells,
        |c| c.learner.clone(),
        |c| (c.binary_strategy.clone(), c.numeric_strategy.clone(), c.system.clone()),
    )
}

/// The learning technique whose error range across sampling strategies
/// is strictly smallest on every system.
pub fn rq1_2_most_stable_learner(cells: &[ExperimentCell]) -> Option<String> {
    most_stable(cells, |c| c.learner.clone())
}

/// A binary sampling strategy strictly better than all others in every
/// (learner, numeric strategy, system) context.
pub fn rq2_1_superior_binary_strategy(cells: &[ExperimentCell]) -> Option<String> {
    superior(
        cells,
        |c| c.binary_strategy.clone(),
        |c| (c.learner.clone(), c.numeric_strategy.clone(), c.system.clone()),
    )
}

/// A numeric sampling strategy strictly better than all others in every
/// (learner, binary strategy, system) context.
pub fn rq2_1_superior_numeric_strategy(cells: &[ExperimentCell]) -> Option<String> {
    superior(
        cells,
        |c| c.numeric_strategy.clone(),
        |c| (c.learner.clone(), c.binary_strategy.clone(), c.system.clone()),
    )
}

/// The binary sampling strategy with the strictly smallest error range
/// across learners and numeric strategies on every system.
pub fn rq2_2_most_stable_binary_strategy(cells: &[ExperimentCell]) -> Option<String> {
    most_stable(cells, |c| c.binary_strategy.clone())
}

/// The numeric sampling strategy with the strictly smallest error range
/// across learners and binary strategies on every system.
pub fn rq2_2_most_stable_numeric_strategy(cells: &[ExperimentCell]) -> Option<String> {
    most_stable(cells, |c| c.numeric_strategy.clone())
}

/// A full (learner, binary strategy, numeric strategy) combination
/// strictly better than all other combinations on every system.
pub fn rq3_1_superior_combination(cells: &[ExperimentCell]) -> Option<(String, String, String)> {
    superior(
        cells,
        |c| (c.learner.clone(), c.binary_strategy.clone(), c.numeric_strategy.clone()),
        |c| c.system.clone(),
    )
}

// ---- significance tests ----

/// Outcome of a one-sided signed-rank test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonOutcome {
    /// Probability of a rank sum at most as extreme under the null.
    pub p_value: f64,
    /// Number of non-zero paired differences entering the statistic.
    pub n: usize,
    /// Sum of the ranks of positive differences.
    pub w_plus: f64,
    /// Whether the exact distribution was enumerated.
    pub exact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Average 1-based ranks of `values`, sharing tied ranks.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j + 2) as f64 / 2.0;
        for &t in &order[i..=j] {
            ranks[t] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Exact left tail of the signed-rank distribution by dynamic
/// programming over doubled ranks (tied ranks are half-integers).
fn exact_signed_rank_tail(doubled_ranks: &[u64], doubled_stat: u64) -> f64 {
    let cap: u64 = doubled_ranks.iter().sum();
    let mut ways = vec![0u64; cap as usize + 1];
    ways[0] = 1;
    for &r in doubled_ranks {
        for s in (r..=cap).rev() {
            ways[s as usize] += ways[(s - r) as usize];
        }
    }
    let hits: u64 = ways[..=doubled_stat.min(cap) as usize].iter().sum();
    hits as f64 / (1u64 << doubled_ranks.len()) as f64
}

/// One-sided Wilcoxon signed-rank test of whether `a` is stochastically
/// smaller than its paired sample `b`.
///
/// Zero differences are dropped first. Up to [`EXACT_WILCOXON_LIMIT`]
/// remaining pairs the p-value enumerates the exact distribution;
/// above, a normal approximation with tie correction and continuity
/// correction is used. All differences zero yields p = 1 with a warning.
pub fn wilcoxon_one_sided(a: &[f64], b: &[f64]) -> Result<WilcoxonOutcome> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("cannot test empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("samples contain NaN".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Ok(WilcoxonOutcome {
            p_value: 1.0,
            n: 0,
            w_plus: 0.0,
            exact: true,
            warning: Some("all paired differences are zero; no evidence either way".into()),
        });
    }
    let n = diffs.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "signed-rank test needs at least 3 non-zero differences, got {n}"
        )));
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let w_plus: f64 =
        diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| *r).sum();
    if n <= EXACT_WILCOXON_LIMIT {
        let doubled: Vec<u64> = ranks.iter().map(|r| (2.0 * r).round() as u64).collect();
        let p = exact_signed_rank_tail(&doubled, (2.0 * w_plus).round() as u64);
        return Ok(WilcoxonOutcome { p_value: p, n, w_plus, exact: true, warning: None });
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0;
    let mut i = 0;
    let mut sorted = magnitudes.clone();
    sorted.sort_by(f64::total_cmp);
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        variance -= (t * t * t - t) / 48.0;
        i = j + 1;
    }
    debug_assert!(variance > 0.0);
    let z = (w_plus + 0.5 - mean) / variance.sqrt();
    let p = Normal::new(0.0, 1.0).expect("unit normal").cdf(z);
    Ok(WilcoxonOutcome { p_value: p, n, w_plus, exact: false, warning: None })
}

// ---- effect size ----

/// Effect-size band for a Cliff's delta value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    /// Band of an absolute delta: below 0.147 negligible, below 0.33
    /// small, below 0.474 medium, large otherwise.
    pub fn from_delta(delta: f64) -> Self {
        let a = delta.abs();
        if a < 0.147 {
            Magnitude::Negligible
        } else if a < 0.33 {
            Magnitude::Small
        } else if a < 0.474 {
            Magnitude::Medium
        } else {
            Magnitude::Large
        }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Magnitude::Negligible => "negligible",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        })
    }
}

/// Cliff's delta of `a` against `b` with its magnitude band: the excess
/// of pairs where `a` exceeds `b` over pairs where it falls below,
/// normalized by the pair count. Negative when `a` tends smaller.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<(f64, Magnitude)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("cannot compare empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("samples contain NaN".into()));
    }
    let mut sorted = b.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut greater = 0u64;
    let mut less = 0u64;
    for &x in a {
        let below = sorted.partition_point(|&y| y < x);
        let at_or_below = sorted.partition_point(|&y| y <= x);
        greater += below as u64;
        less += (sorted.len() - at_or_below) as u64;
    }
    let pairs = (a.len() as f64) * (b.len() as f64);
    let delta = (greater as f64 - less as f64) / pairs;
    Ok((delta, Magnitude::from_delta(delta)))
}

/// Pairwise one-sided comparison matrices over labeled, paired groups.
///
/// Row beats column: `p_values[i][j]` tests whether group `i` has
/// stochastically smaller values than group `j`, so winners show small
/// p-values and negative deltas along their row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsComparison {
    pub labels: Vec<String>,
    pub p_values: Vec<Vec<Option<f64>>>,
    pub deltas: Vec<Vec<Option<f64>>>,
    pub magnitudes: Vec<Vec<Option<Magnitude>>>,
}

impl StatsComparison {
    /// Off-diagonal pairs with p below `alpha`, as (row, column) indices.
    pub fn significant_pairs(&self, alpha: f64) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for (i, row) in self.p_values.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                if let Some(p) = p {
                    if *p < alpha {
                        pairs.push((i, j));
                    }
                }
            }
        }
        pairs
    }
}

/// Builds the full pairwise comparison of equally sized, paired groups.
pub fn compare_groups(groups: &[(String, Vec<f64>)]) -> Result<StatsComparison> {
    if groups.len() < 2 {
        return Err(Error::InvalidInput("pairwise comparison needs at least 2 groups".into()));
    }
    let len = groups[0].1.len();
    if groups.iter().any(|(_, g)| g.len() != len) {
        return Err(Error::InvalidInput("paired groups must have equal lengths".into()));
    }
    let k = groups.len();
    let mut p_values = vec![vec![None; k]; k];
    let mut deltas = vec![vec![None; k]; k];
    let mut magnitudes = vec![vec![None; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            p_values[i][j] = Some(wilcoxon_one_sided(&groups[i].1, &groups[j].1)?.p_value);
            let (delta, magnitude) = cliffs_delta(&groups[i].1, &groups[j].1)?;
            deltas[i][j] = Some(delta);
            magnitudes[i][j] = Some(magnitude);
        }
    }
    Ok(StatsComparison {
        labels: groups.iter().map(|(l, _)| l.clone()).collect(),
        p_values,
        deltas,
        magnitudes,
    })
}

// ---- trade-off views ----

/// One candidate on the size-versus-error trade-off plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub combo: String,
    /// Learning-set size as a fraction of the whole space, in (0, 1].
    pub relative_size: f64,
    pub mean_error: f64,
}

impl ParetoPoint {
    pub fn new(combo: impl Into<String>, relative_size: f64, mean_error: f64) -> Result<Self> {
        if !(relative_size > 0.0 && relative_size <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "relative learning-set size must be in (0, 1], got {relative_size}"
            )));
        }
        if mean_error < 0.0 || mean_error.is_nan() {
            return Err(Error::InvalidInput(format!(
                "mean error must be non-negative, got {mean_error}"
            )));
        }
        Ok(ParetoPoint { combo: combo.into(), relative_size, mean_error })
    }
}

/// The non-dominated subset when minimizing both relative size and mean
/// error, sorted ascending by mean error.
///
/// Exact duplicates of a front point are kept; a point is dropped only
/// when another point is at least as good in both coordinates and
/// strictly better in one.
pub fn pareto_front(points: &[ParetoPoint]) -> Result<Vec<ParetoPoint>> {
    if points.is_empty() {
        return Err(Error::InvalidInput("cannot take the front of no points".into()));
    }
    let mut by_size: Vec<&ParetoPoint> = points.iter().collect();
    by_size.sort_by(|p, q| {
        p.relative_size.total_cmp(&q.relative_size).then(p.mean_error.total_cmp(&q.mean_error))
    });
    let mut front: Vec<ParetoPoint> = Vec::new();
    let mut best_error = f64::INFINITY;
    let mut best_size = f64::NAN;
    for p in by_size {
        if p.mean_error < best_error {
            best_error = p.mean_error;
            best_size = p.relative_size;
            front.push(p.clone());
        } else if p.mean_error == best_error && p.relative_size == best_size {
            front.push(p.clone());
        }
    }
    front.sort_by(|p, q| {
        p.mean_error.total_cmp(&q.mean_error).then(p.relative_size.total_cmp(&q.relative_size))
    });
    Ok(front)
}

/// Spread of the measured performance values: (max − min) / min.
pub fn performance_variation(table: &MeasurementTable) -> Result<f64> {
    if table.is_empty() {
        return Err(Error::InvalidInput("performance variation of an empty table".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in table.values() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((hi - lo) / lo)
}
