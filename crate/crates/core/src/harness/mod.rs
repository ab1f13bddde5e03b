//! Experiment harness: wires sampling, tuning, training, and evaluation
//! into a reproducible grid run.
//!
//! A run is described by an [`ExperimentPlan`]: one system (measured CSV or
//! synthetic), a list of learners, a list of binary sampling strategies, a
//! list of numeric ones, and a seed list for the random strategies. Every
//! (learner, binary, numeric) combination becomes one [`ExperimentCell`]
//! holding the mean relative error over the whole measurement table;
//! combinations that involve a random strategy are repeated once per seed
//! and averaged.
//!
//! All per-cell randomness is derived by hashing the master seed with the
//! strategy and learner identifiers, so extending a plan with more learners
//! or strategies never changes the cells that were already there. Sampling
//! seeds deliberately exclude the learner, so learners are always compared
//! on identical learning sets.
//!
//! Cells are independent jobs. With the `parallel` feature they run on a
//! rayon pool; results are sorted by cell key before they are returned, so
//! the output does not depend on the execution mode.

use crate::binsample::{
    sample_negative_option_wise, sample_option_wise, sample_random_binary, sample_t_wise,
};
use crate::error::Error;
use crate::evaluation::{self, ExperimentCell};
use crate::learners::{train, LabeledSet, Learner};
use crate::numsample::{
    sample_box_behnken, sample_central_composite, sample_d_optimal_with, sample_ofat,
    sample_plackett_burman, sample_random_numeric, DEFAULT_RESTARTS,
};
use crate::parallel::{map_indexed, Execution};
use crate::rng::SeedHasher;
use crate::space::{
    BinarySample, ConfigSample, ConfigurationSpace, MeasurementTable, NumericSample, Provenance,
    SampleSet,
};
use crate::tuning::{random_search_with, HyperParamSpace, DEFAULT_BUDGET, DEFAULT_FOLDS};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

mod ingest;
mod report;
mod synth;

pub use ingest::{ingest_measurements, read_measurements};
pub use report::{emit_report, paired_error_groups, read_cells_csv, write_cells_csv, GroupBy};
pub use synth::{generate_synthetic_system, SyntheticSystemSpec};

/// Levels per numeric option used by the grid's one-factor-at-a-time cell.
pub const OFAT_LEVELS: usize = 5;

/// Axial distance used by the grid's inscribed central-composite cell.
pub const CCI_ALPHA: f64 = 0.5;

/// Binary-space sampling strategies of the experiment grid. The `Rb*`
/// entries draw a uniform random sample of the same size as the design
/// they are named after.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinaryStrategy {
    Ow,
    NegOw,
    T2,
    T3,
    RbOw,
    RbT2,
    RbT3,
}

impl BinaryStrategy {
    pub const ALL: [BinaryStrategy; 7] = [
        BinaryStrategy::Ow,
        BinaryStrategy::NegOw,
        BinaryStrategy::T2,
        BinaryStrategy::T3,
        BinaryStrategy::RbOw,
        BinaryStrategy::RbT2,
        BinaryStrategy::RbT3,
    ];

    pub fn id(self) -> &'static str {
        match self {
            BinaryStrategy::Ow => "ow",
            BinaryStrategy::NegOw => "negow",
            BinaryStrategy::T2 => "t2",
            BinaryStrategy::T3 => "t3",
            BinaryStrategy::RbOw => "rb-ow",
            BinaryStrategy::RbT2 => "rb-t2",
            BinaryStrategy::RbT3 => "rb-t3",
        }
    }

    /// Whether the strategy depends on a seed and is therefore averaged
    /// over the plan's seed list.
    pub fn is_random(self) -> bool {
        matches!(self, BinaryStrategy::RbOw | BinaryStrategy::RbT2 | BinaryStrategy::RbT3)
    }

    /// Draws the sample this strategy stands for. `seed` only matters for
    /// the random variants.
    pub fn sample(self, space: &ConfigurationSpace, seed: u64) -> Result<BinarySample> {
        match self {
            BinaryStrategy::Ow => sample_option_wise(space),
            BinaryStrategy::NegOw => sample_negative_option_wise(space),
            BinaryStrategy::T2 => sample_t_wise(space, 2),
            BinaryStrategy::T3 => sample_t_wise(space, 3),
            BinaryStrategy::RbOw => random_binary_like(space, sample_option_wise(space)?, seed),
            BinaryStrategy::RbT2 => random_binary_like(space, sample_t_wise(space, 2)?, seed),
            BinaryStrategy::RbT3 => random_binary_like(space, sample_t_wise(space, 3)?, seed),
        }
    }
}

/// Random binary sample of the same size as `reference`.
fn random_binary_like(
    space: &ConfigurationSpace,
    reference: BinarySample,
    seed: u64,
) -> Result<BinarySample> {
    sample_random_binary(space, reference.len(), seed)
}

impl fmt::Display for BinaryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for BinaryStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BinaryStrategy::ALL.into_iter().find(|b| b.id() == s).ok_or_else(|| {
            Error::InvalidInput(format!(
                "unknown binary strategy `{s}` (expected one of {})",
                id_list(BinaryStrategy::ALL.iter().map(|b| b.id()))
            ))
        })
    }
}

impl Serialize for BinaryStrategy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for BinaryStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Numeric-space sampling strategies of the experiment grid. Plackett-Burman
/// entries name their (runs, levels) shape; D-optimal and random entries
/// name their design size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NumericStrategy {
    Ofat,
    Bbd,
    Cci,
    Pbd9x3,
    Pbd25x5,
    Pbd125x5,
    Pbd49x7,
    Dod50,
    Dod125,
    Rn50,
    Rn125,
}

impl NumericStrategy {
    pub const ALL: [NumericStrategy; 11] = [
        NumericStrategy::Ofat,
        NumericStrategy::Bbd,
        NumericStrategy::Cci,
        NumericStrategy::Pbd9x3,
        NumericStrategy::Pbd25x5,
        NumericStrategy::Pbd125x5,
        NumericStrategy::Pbd49x7,
        NumericStrategy::Dod50,
        NumericStrategy::Dod125,
        NumericStrategy::Rn50,
        NumericStrategy::Rn125,
    ];

    pub fn id(self) -> &'static str {
        match self {
            NumericStrategy::Ofat => "ofat",
            NumericStrategy::Bbd => "bbd",
            NumericStrategy::Cci => "cci",
            NumericStrategy::Pbd9x3 => "pbd-9x3",
            NumericStrategy::Pbd25x5 => "pbd-25x5",
            NumericStrategy::Pbd125x5 => "pbd-125x5",
            NumericStrategy::Pbd49x7 => "pbd-49x7",
            NumericStrategy::Dod50 => "dod-50",
            NumericStrategy::Dod125 => "dod-125",
            NumericStrategy::Rn50 => "rn-50",
            NumericStrategy::Rn125 => "rn-125",
        }
    }

    /// Whether the strategy is averaged over the plan's seed list. The
    /// D-optimal designs use a seed internally for their restarts but run
    /// once per cell, like the deterministic designs.
    pub fn is_random(self) -> bool {
        matches!(self, NumericStrategy::Rn50 | NumericStrategy::Rn125)
    }

    pub fn sample(
        self,
        space: &ConfigurationSpace,
        seed: u64,
        mode: Execution,
    ) -> Result<NumericSample> {
        match self {
            NumericStrategy::Ofat => sample_ofat(space, OFAT_LEVELS),
            NumericStrategy::Bbd => sample_box_behnken(space),
            NumericStrategy::Cci => sample_central_composite(space, CCI_ALPHA),
            NumericStrategy::Pbd9x3 => sample_plackett_burman(space, 9, 3),
            NumericStrategy::Pbd25x5 => sample_plackett_burman(space, 25, 5),
            NumericStrategy::Pbd125x5 => sample_plackett_burman(space, 125, 5),
            NumericStrategy::Pbd49x7 => sample_plackett_burman(space, 49, 7),
            NumericStrategy::Dod50 => {
                sample_d_optimal_with(space, 50, seed, DEFAULT_RESTARTS, mode)
            }
            NumericStrategy::Dod125 => {
                sample_d_optimal_with(space, 125, seed, DEFAULT_RESTARTS, mode)
            }
            NumericStrategy::Rn50 => sample_random_numeric(space, 50, seed),
            NumericStrategy::Rn125 => sample_random_numeric(space, 125, seed),
        }
    }
}

impl fmt::Display for NumericStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for NumericStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NumericStrategy::ALL.into_iter().find(|n| n.id() == s).ok_or_else(|| {
            Error::InvalidInput(format!(
                "unknown numeric strategy `{s}` (expected one of {})",
                id_list(NumericStrategy::ALL.iter().map(|n| n.id()))
            ))
        })
    }
}

impl Serialize for NumericStrategy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for NumericStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

fn id_list<'a>(ids: impl Iterator<Item = &'a str>) -> String {
    ids.collect::<Vec<_>>().join(", ")
}

/// Merges a binary and a numeric sample into full configurations: the
/// cartesian product of both member lists, minus pairings that violate a
/// constraint spanning both sub-spaces. The drop count is recorded in the
/// result's provenance. Pair order follows the input orders, binary outer,
/// numeric inner.
pub fn build_learning_set(
    bin: &BinarySample,
    num: &NumericSample,
    space: &ConfigurationSpace,
) -> Result<ConfigSample> {
    let mut members = Vec::with_capacity(bin.len() * num.len());
    let mut seen: HashSet<crate::space::Configuration> = HashSet::new();
    let mut dropped = 0usize;
    let mut duplicates = 0usize;
    for b in &bin.members {
        for n in &num.members {
            let config = space.configuration(b.clone(), n.clone())?;
            if !space.is_valid(&config) {
                dropped += 1;
                continue;
            }
            if seen.insert(config.clone()) {
                members.push(config);
            } else {
                duplicates += 1;
            }
        }
    }
    if members.is_empty() {
        return Err(Error::EmptyLearningSet);
    }
    let mut provenance = Provenance::new(format!(
        "{}x{}",
        bin.provenance.strategy, num.provenance.strategy
    ));
    provenance.params = serde_json::json!({
        "binary": bin.provenance,
        "numeric": num.provenance,
        "pairings": bin.len() * num.len(),
        "dropped_by_constraints": dropped,
        "duplicates_merged": duplicates,
    });
    provenance.warnings.extend(bin.provenance.warnings.iter().cloned());
    provenance.warnings.extend(num.provenance.warnings.iter().cloned());
    if dropped > 0 {
        provenance.warnings.push(format!("{dropped} pairings violated cross-space constraints"));
    }
    Ok(SampleSet { members, provenance })
}

/// Where a plan's system comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSource {
    /// A configuration-space JSON file plus a measurement CSV.
    Measurements { space: PathBuf, table: PathBuf },
    /// A seeded synthetic system generated on the fly.
    Synthetic { spec: SyntheticSystemSpec },
}

/// Loads or generates the system a plan refers to.
pub fn resolve_system(source: &SystemSource) -> Result<(ConfigurationSpace, MeasurementTable)> {
    match source {
        SystemSource::Measurements { space, table } => {
            let text = std::fs::read_to_string(space)?;
            let space = ConfigurationSpace::from_json(&text)?;
            let table = ingest_measurements(table, &space)?;
            Ok((space, table))
        }
        SystemSource::Synthetic { spec } => {
            let (space, _model, table) = generate_synthetic_system(spec)?;
            Ok((space, table))
        }
    }
}

/// Cross-validation settings used when tuning each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuningSettings {
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

impl Default for TuningSettings {
    fn default() -> Self {
        TuningSettings { folds: DEFAULT_FOLDS, budget: DEFAULT_BUDGET }
    }
}

/// A full experiment description; serializable as a plan JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub system: SystemSource,
    #[serde(default = "default_learners")]
    pub learners: Vec<Learner>,
    #[serde(default = "default_binary_strategies")]
    pub binary_strategies: Vec<BinaryStrategy>,
    #[serde(default = "default_numeric_strategies")]
    pub numeric_strategies: Vec<NumericStrategy>,
    /// Seeds over which cells with a random strategy are averaged.
    #[serde(default = "default_strategy_seeds")]
    pub strategy_seeds: Vec<u64>,
    #[serde(default)]
    pub tuning: TuningSettings,
    /// Where `run` writes the cells file and reports; optional for callers
    /// that consume cells in memory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub master_seed: u64,
    /// Evaluate on held-out rows only instead of the whole table.
    #[serde(default)]
    pub exclude_learning_set: bool,
}

fn default_learners() -> Vec<Learner> {
    Learner::ALL.to_vec()
}

fn default_binary_strategies() -> Vec<BinaryStrategy> {
    BinaryStrategy::ALL.to_vec()
}

fn default_numeric_strategies() -> Vec<NumericStrategy> {
    NumericStrategy::ALL.to_vec()
}

fn default_strategy_seeds() -> Vec<u64> {
    (1..=10).collect()
}

impl ExperimentPlan {
    /// The complete grid: every learner against every strategy pair, ten
    /// averaging seeds, default tuning settings.
    pub fn full_grid(system: SystemSource, master_seed: u64) -> Self {
        ExperimentPlan {
            system,
            learners: default_learners(),
            binary_strategies: default_binary_strategies(),
            numeric_strategies: default_numeric_strategies(),
            strategy_seeds: default_strategy_seeds(),
            tuning: TuningSettings::default(),
            output_dir: None,
            master_seed,
            exclude_learning_set: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: ExperimentPlan = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialization cannot fail")
    }

    pub fn validate(&self) -> Result<()> {
        fn distinct<T: Ord>(items: &[T], what: &str) -> Result<()> {
            if items.is_empty() {
                return Err(Error::InvalidInput(format!("plan needs at least one {what}")));
            }
            let unique: std::collections::BTreeSet<&T> = items.iter().collect();
            if unique.len() != items.len() {
                return Err(Error::InvalidInput(format!("plan lists a {what} twice")));
            }
            Ok(())
        }
        distinct(&self.learners, "learner")?;
        distinct(&self.binary_strategies, "binary strategy")?;
        distinct(&self.numeric_strategies, "numeric strategy")?;
        distinct(&self.strategy_seeds, "strategy seed")?;
        if self.tuning.folds < 2 {
            return Err(Error::InvalidInput("tuning needs at least 2 folds".into()));
        }
        if self.tuning.budget == 0 {
            return Err(Error::InvalidInput("tuning needs a budget of at least 1".into()));
        }
        Ok(())
    }
}

/// The outcome of a plan: one cell per grid combination plus the size of
/// each system's configuration space, which reports need for relative
/// learning-set sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub cells: Vec<ExperimentCell>,
    pub system_sizes: BTreeMap<String, usize>,
}

/// Resolves the plan's system and runs the grid with the default execution
/// mode.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentRun> {
    plan.validate()?;
    let (space, table) = resolve_system(&plan.system)?;
    let cells = run_experiment_on(plan, &space, &table, Execution::default())?;
    let mut system_sizes = BTreeMap::new();
    system_sizes.insert(table.system.clone(), table.len());
    Ok(ExperimentRun { cells, system_sizes })
}

/// Runs the plan's grid against an already-resolved system. Cells that fail
/// (sampler preconditions, missing measurements, tuning or training errors)
/// are reported with infinite error and a reason; the run continues. The
/// result is sorted by (learner, binary strategy, numeric strategy, system).
pub fn run_experiment_on(
    plan: &ExperimentPlan,
    space: &ConfigurationSpace,
    table: &MeasurementTable,
    mode: Execution,
) -> Result<Vec<ExperimentCell>> {
    plan.validate()?;
    if table.is_empty() {
        return Err(Error::InvalidInput("measurement table is empty".into()));
    }
    let mut grid = Vec::new();
    for &learner in &plan.learners {
        for &bin in &plan.binary_strategies {
            for &num in &plan.numeric_strategies {
                grid.push((learner, bin, num));
            }
        }
    }
    let mut cells = map_indexed(mode, grid, |(learner, bin, num)| {
        run_cell(plan, space, table, learner, bin, num, mode)
    });
    cells.sort_by(|a, b| {
        (&a.learner, &a.binary_strategy, &a.numeric_strategy, &a.system)
            .cmp(&(&b.learner, &b.binary_strategy, &b.numeric_strategy, &b.system))
    });
    Ok(cells)
}

/// One grid combination, averaged over the seed list when a random strategy
/// is involved. Any failing repetition fails the whole cell.
fn run_cell(
    plan: &ExperimentPlan,
    space: &ConfigurationSpace,
    table: &MeasurementTable,
    learner: Learner,
    bin: BinaryStrategy,
    num: NumericStrategy,
    mode: Execution,
) -> ExperimentCell {
    let averaged = bin.is_random() || num.is_random();
    let reps: &[u64] = if averaged { &plan.strategy_seeds } else { &[0] };
    let mut errors = Vec::with_capacity(reps.len());
    let mut size = 0usize;
    for &rep in reps {
        match run_repetition(plan, space, table, learner, bin, num, rep, mode) {
            Ok((error, set_size)) => {
                errors.push(error);
                if size == 0 {
                    size = set_size;
                }
            }
            Err(err) => {
                let reason = if averaged {
                    format!("seed {rep}: {err}")
                } else {
                    err.to_string()
                };
                return ExperimentCell::failed(
                    learner.id(),
                    bin.id(),
                    num.id(),
                    &table.system,
                    size,
                    reason,
                );
            }
        }
    }
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    match ExperimentCell::new(learner.id(), bin.id(), num.id(), &table.system, size, mean, None) {
        Ok(cell) => cell,
        Err(err) => ExperimentCell::failed(
            learner.id(),
            bin.id(),
            num.id(),
            &table.system,
            size,
            err.to_string(),
        ),
    }
}

/// Sample, assemble, tune, train, evaluate: one repetition of one cell.
/// Returns the mean error over the table and the learning-set size.
#[allow(clippy::too_many_arguments)]
fn run_repetition(
    plan: &ExperimentPlan,
    space: &ConfigurationSpace,
    table: &MeasurementTable,
    learner: Learner,
    bin: BinaryStrategy,
    num: NumericStrategy,
    rep: u64,
    mode: Execution,
) -> Result<(f64, usize)> {
    let master = plan.master_seed;
    // Sampling seeds ignore the learner so every learner sees the same
    // learning set for a given (strategy, seed) pair.
    let bin_seed =
        SeedHasher::new(master).write_str("sample-bin").write_str(bin.id()).write_u64(rep).finish();
    let num_seed =
        SeedHasher::new(master).write_str("sample-num").write_str(num.id()).write_u64(rep).finish();
    let bin_sample = bin.sample(space, bin_seed)?;
    let num_sample = num.sample(space, num_seed, mode)?;
    let learning = build_learning_set(&bin_sample, &num_sample, space)?;
    let mut rows = Vec::with_capacity(learning.len());
    for config in &learning.members {
        let value = table.get(config).ok_or_else(|| {
            Error::InvalidInput("a sampled configuration has no measurement in the table".into())
        })?;
        rows.push((config.clone(), value));
    }
    let size = rows.len();
    let data = LabeledSet::new(rows)?;
    let tune_seed = SeedHasher::new(master)
        .write_str("tune")
        .write_str(learner.id())
        .write_str(bin.id())
        .write_str(num.id())
        .write_u64(rep)
        .finish();
    let (best, _trials) = random_search_with(
        learner,
        space,
        HyperParamSpace::bundled(),
        &data,
        plan.tuning.folds,
        plan.tuning.budget,
        tune_seed,
        mode,
    )?;
    let predictor = train(learner, space, &data, &best)?;
    let error = if plan.exclude_learning_set {
        evaluation::mean_error_excluding(&predictor, table, &learning.members)?
    } else {
        evaluation::mean_error(&predictor, table)?
    };
    Ok((error, size))
}
