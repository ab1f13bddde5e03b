//! Hyper-parameter tuning by random search over documented value ranges.
//!
//! A [`HyperParamSpace`] maps each learner to the domains its parameters
//! may be drawn from: a finite value list, an integer range, or a
//! log-uniform real range. [`random_search`] evaluates a fixed budget of
//! candidate settings by k-fold cross-validation and returns the one with
//! the lowest mean fold error. Trial 0 always evaluates the learner's
//! documented defaults, and the candidate for trial `t` depends only on
//! the tuning seed and `t`, so raising the budget re-evaluates the same
//! prefix of trials and can only improve (or keep) the winner.
//!
//! Trials are independent and may run concurrently; results are reduced
//! in trial order, so the reported winner does not depend on scheduling.

use crate::error::Error;
use crate::learners::{default_hyper_params, train, HpValue, HyperParams, LabeledSet, Learner};
use crate::parallel::{self, Execution};
use crate::rng::{SeedHasher, Stream};
use crate::space::ConfigurationSpace;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::sync::OnceLock;

/// Cross-validation folds used when the caller does not choose.
pub const DEFAULT_FOLDS: usize = 5;

/// Random-search trials used when the caller does not choose.
pub const DEFAULT_BUDGET: usize = 100;

const BUNDLED: &str = include_str!("../../data/hp_space.json");

/// One sampling domain for a single hyper-parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "snake_case")]
pub enum ParamDomain {
    /// Draw uniformly from an explicit value list.
    Choice { values: Vec<HpValue> },
    /// Draw an integer uniformly from `min..=max`.
    IntRange { min: i64, max: i64 },
    /// Draw a positive real log-uniformly from `[min, max]`.
    LogUniform { min: f64, max: f64 },
}

impl ParamDomain {
    fn check(&self, learner: &str, key: &str) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::InvalidInput(format!(
                "hyper-parameter space {learner}.{key}: {what}"
            )))
        };
        match self {
            ParamDomain::Choice { values } if values.is_empty() => bad("empty value list"),
            ParamDomain::IntRange { min, max } if min > max => bad("empty integer range"),
            ParamDomain::LogUniform { min, max }
                if !(*min > 0.0 && *max >= *min && max.is_finite()) =>
            {
                bad("log-uniform range needs 0 < min <= max, both finite")
            }
            _ => Ok(()),
        }
    }

    /// Whether `value` lies inside the domain.
    pub fn contains(&self, value: &HpValue) -> bool {
        match self {
            ParamDomain::Choice { values } => values.contains(value),
            ParamDomain::IntRange { min, max } => {
                value.as_i64().is_some_and(|i| i >= *min && i <= *max)
            }
            ParamDomain::LogUniform { min, max } => {
                value.as_f64().is_some_and(|f| f >= *min && f <= *max)
            }
        }
    }

    /// Draws one value from the domain.
    pub fn sample(&self, rng: &mut Stream) -> HpValue {
        match self {
            ParamDomain::Choice { values } => values[rng.below(values.len())].clone(),
            ParamDomain::IntRange { min, max } => {
                HpValue::Int(min + rng.below((max - min + 1) as usize) as i64)
            }
            ParamDomain::LogUniform { min, max } => HpValue::Float(rng.log_uniform(*min, *max)),
        }
    }
}

/// Per-learner sampling domains for every tunable hyper-parameter.
///
/// A space is valid when it covers exactly the documented parameter keys
/// of every learner and each documented default lies inside its domain,
/// so a budget-1 search is always well-defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperParamSpace {
    per_learner: BTreeMap<String, BTreeMap<String, ParamDomain>>,
}

impl HyperParamSpace {
    /// Parses a space from JSON and validates it.
    pub fn from_json(text: &str) -> Result<Self> {
        let space: HyperParamSpace = serde_json::from_str(text)?;
        space.validate()?;
        Ok(space)
    }

    /// The space shipped with the crate.
    pub fn bundled() -> &'static Self {
        static SPACE: OnceLock<HyperParamSpace> = OnceLock::new();
        SPACE.get_or_init(|| {
            HyperParamSpace::from_json(BUNDLED).expect("bundled hyper-parameter space is valid")
        })
    }

    fn validate(&self) -> Result<()> {
        for learner in Learner::ALL {
            let id = learner.id();
            let domains = self.per_learner.get(id).ok_or_else(|| {
                Error::InvalidInput(format!("hyper-parameter space is missing learner `{id}`"))
            })?;
            let defaults = default_hyper_params(learner);
            for key in domains.keys() {
                if !defaults.contains_key(key) {
                    return Err(Error::InvalidInput(format!(
                        "hyper-parameter space {id}.{key}: not a parameter of this learner"
                    )));
                }
            }
            for (key, default) in &defaults {
                let domain = domains.get(key).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "hyper-parameter space {id}: missing parameter `{key}`"
                    ))
                })?;
                domain.check(id, key)?;
                if !domain.contains(default) {
                    return Err(Error::InvalidInput(format!(
                        "hyper-parameter space {id}.{key}: default {default:?} lies outside the domain"
                    )));
                }
            }
        }
        for id in self.per_learner.keys() {
            if Learner::ALL.iter().all(|l| l.id() != id) {
                return Err(Error::InvalidInput(format!(
                    "hyper-parameter space names unknown learner `{id}`"
                )));
            }
        }
        Ok(())
    }

    /// The domains of one learner.
    pub fn domains(&self, learner: Learner) -> Result<&BTreeMap<String, ParamDomain>> {
        self.per_learner.get(learner.id()).ok_or_else(|| {
            Error::InvalidInput(format!(
                "hyper-parameter space is missing learner `{}`",
                learner.id()
            ))
        })
    }

    /// Draws one complete parameter setting for `learner`.
    pub fn sample(&self, learner: Learner, rng: &mut Stream) -> Result<HyperParams> {
        let domains = self.domains(learner)?;
        Ok(domains
            .iter()
            .map(|(key, domain)| (key.clone(), domain.sample(rng)))
            .collect())
    }
}

/// One evaluated candidate from a random search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Position in the trial sequence; trial 0 is the documented defaults.
    pub trial: usize,
    pub hyper_params: HyperParams,
    /// Mean relative error per fold; empty when the trial failed.
    pub fold_errors: Vec<f64>,
    /// Mean over folds; infinite when the trial failed.
    pub cv_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Splits `0..n` into `folds` shuffled, near-equal index groups.
///
/// Group sizes differ by at most one; the shuffle is a pure function of
/// `seed`, so every trial of a search scores against the same folds.
pub fn kfold_partition(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidInput(format!(
            "cross-validation needs at least 2 folds, got {folds}"
        )));
    }
    if n < folds {
        return Err(Error::InvalidInput(format!(
            "cross-validation with {folds} folds needs at least {folds} rows, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    Stream::new(seed).shuffle(&mut order);
    let base = n / folds;
    let extra = n % folds;
    let mut parts = Vec::with_capacity(folds);
    let mut at = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        parts.push(order[at..at + size].to_vec());
        at += size;
    }
    Ok(parts)
}

/// Mean relative prediction error on each held-out fold.
pub fn kfold_errors(
    learner: Learner,
    space: &ConfigurationSpace,
    hyper_params: &HyperParams,
    data: &LabeledSet,
    folds: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let parts = kfold_partition(data.len(), folds, seed)?;
    let rows = data.rows();
    let mut held = vec![false; rows.len()];
    let mut errors = Vec::with_capacity(folds);
    for part in &parts {
        for &i in part {
            held[i] = true;
        }
        let train_rows: Vec<_> = rows
            .iter()
            .enumerate()
            .filter(|(i, _)| !held[*i])
            .map(|(_, row)| row.clone())
            .collect();
        let predictor = train(learner, space, &LabeledSet::new(train_rows)?, hyper_params)?;
        let mut total = 0.0;
        for &i in part {
            let (config, measured) = &rows[i];
            total += (predictor.predict(config)? - measured).abs() / measured;
        }
        errors.push(total / part.len() as f64);
        for &i in part {
            held[i] = false;
        }
    }
    Ok(errors)
}

/// Mean of [`kfold_errors`] over all folds.
pub fn kfold_error(
    learner: Learner,
    space: &ConfigurationSpace,
    hyper_params: &HyperParams,
    data: &LabeledSet,
    folds: usize,
    seed: u64,
) -> Result<f64> {
    let errors = kfold_errors(learner, space, hyper_params, data, folds, seed)?;
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

fn trial_params(
    learner: Learner,
    hp_space: &HyperParamSpace,
    seed: u64,
    trial: usize,
) -> Result<HyperParams> {
    if trial == 0 {
        return Ok(default_hyper_params(learner));
    }
    let trial_seed = SeedHasher::new(seed)
        .write_str("tune-trial")
        .write_u64(trial as u64)
        .finish();
    hp_space.sample(learner, &mut Stream::new(trial_seed))
}

/// [`random_search`] with an explicit execution mode.
#[allow(clippy::too_many_arguments)]
pub fn random_search_with(
    learner: Learner,
    space: &ConfigurationSpace,
    hp_space: &HyperParamSpace,
    data: &LabeledSet,
    folds: usize,
    budget: usize,
    seed: u64,
    mode: Execution,
) -> Result<(HyperParams, Vec<TrialResult>)> {
    if budget == 0 {
        return Err(Error::InvalidInput(
            "random search needs a budget of at least 1 trial".into(),
        ));
    }
    // Surface precondition and space problems before spending the budget.
    kfold_partition(data.len(), folds, seed)?;
    hp_space.domains(learner)?;
    let fold_seed = SeedHasher::new(seed).write_str("tune-folds").finish();
    let trials = parallel::map_range(mode, budget, |trial| {
        let hyper_params = trial_params(learner, hp_space, seed, trial)
            .expect("domains were validated before the search started");
        match kfold_errors(learner, space, &hyper_params, data, folds, fold_seed) {
            Ok(fold_errors) => {
                let mean = fold_errors.iter().sum::<f64>() / fold_errors.len() as f64;
                TrialResult {
                    trial,
                    hyper_params,
                    fold_errors,
                    cv_error: if mean.is_finite() { mean } else { f64::INFINITY },
                    failure: None,
                }
            }
            Err(e) => TrialResult {
                trial,
                hyper_params,
                fold_errors: Vec::new(),
                cv_error: f64::INFINITY,
                failure: Some(e.to_string()),
            },
        }
    });
    let mut best = 0;
    for (i, t) in trials.iter().enumerate() {
        if t.cv_error < trials[best].cv_error {
            best = i;
        }
    }
    Ok((trials[best].hyper_params.clone(), trials))
}

/// Picks the hyper-parameter setting with the lowest cross-validation
/// error among `budget` candidates.
///
/// Trial 0 evaluates the documented defaults; later trials draw from
/// `hp_space` with a per-trial seed derived from (`seed`, trial index).
/// Failed trainings score as infinite error. Ties keep the earliest
/// trial, so the defaults win unless a draw strictly beats them.
pub fn random_search(
    learner: Learner,
    space: &ConfigurationSpace,
    hp_space: &HyperParamSpace,
    data: &LabeledSet,
    folds: usize,
    budget: usize,
    seed: u64,
) -> Result<(HyperParams, Vec<TrialResult>)> {
    random_search_with(
        learner,
        space,
        hp_space,
        data,
        folds,
        budget,
        seed,
        Execution::default(),
    )
}

/// Writes a trial log as CSV with one row per trial.
///
/// Columns: trial index, parameter setting as JSON, per-fold errors
/// joined by `;`, mean error, and the failure message when one exists.
pub fn write_trial_log<W: Write>(trials: &[TrialResult], out: &mut W) -> Result<()> {
    writeln!(out, "trial,params,fold_errors,cv_error,failure")?;
    for t in trials {
        let params = serde_json::to_string(&t.hyper_params)?;
        let folds = t
            .fold_errors
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            out,
            "{},{},{},{},{}",
            t.trial,
            csv_quote(&params),
            folds,
            t.cv_error,
            csv_quote(t.failure.as_deref().unwrap_or("")),
        )?;
    }
    Ok(())
}

fn csv_quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}
