//! Regression learners behind a common train/predict contract.
//!
//! Six learners share one entry point: stepwise linear regression over an
//! expanding term pool (`mr`), regression trees (`cart`), bagged forests of
//! such trees (`rf`), k-nearest-neighbors (`knn`), kernel ridge regression
//! (`krr`), and epsilon-insensitive support vector regression (`svr`).
//! Hyper-parameters arrive as a string-keyed map; each learner validates its
//! own keys and rejects unknown ones. Trained predictors are immutable,
//! serialize to JSON, and refuse configurations from a different space.
//!
//! Feature encoding: binary options map to 0/1 in declared order, followed
//! by the numeric options. Distance- and kernel-based learners (`knn`,
//! `krr`, `svr`) see numeric values normalized to [0, 1]; `mr`, `cart`, and
//! `rf` see raw domain values so their terms and thresholds stay readable.

pub mod cart;
pub mod forest;
pub mod knn;
pub mod krr;
pub mod mr;
pub mod svr;

use crate::error::Error;
use crate::space::{Configuration, ConfigurationSpace};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Learner {
    Mr,
    Cart,
    Rf,
    Knn,
    Krr,
    Svr,
}

impl Learner {
    pub const ALL: [Learner; 6] =
        [Learner::Mr, Learner::Cart, Learner::Rf, Learner::Knn, Learner::Krr, Learner::Svr];

    pub fn id(self) -> &'static str {
        match self {
            Learner::Mr => "mr",
            Learner::Cart => "cart",
            Learner::Rf => "rf",
            Learner::Knn => "knn",
            Learner::Krr => "krr",
            Learner::Svr => "svr",
        }
    }
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Learner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Learner::ALL
            .into_iter()
            .find(|l| l.id() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown learner `{s}`")))
    }
}

/// One hyper-parameter value; the map form keeps learner configurations
/// uniform across the tuning and reporting layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HpValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

pub type HyperParams = BTreeMap<String, HpValue>;

impl HpValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            HpValue::Int(v) => Some(*v as f64),
            HpValue::Float(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            HpValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            HpValue::Str(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            HpValue::Bool(v) => Some(*v),
            _ => None,
        }
    }
}

/// The documented default hyper-parameters, used as trial 0 of every
/// random search.
pub fn default_hyper_params(learner: Learner) -> HyperParams {
    fn map(entries: &[(&str, HpValue)]) -> HyperParams {
        entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }
    use HpValue::{Bool, Float, Int, Str};
    match learner {
        Learner::Mr => map(&[
            ("minImprovement", Float(0.01)),
            ("lossFunction", Str("relative".into())),
            ("functionTypes", Str("polynomial".into())),
        ]),
        Learner::Cart => map(&[
            ("splitter", Str("best".into())),
            ("max_features", Str("all".into())),
            ("min_samples_leaf", Int(1)),
            ("random_state", Int(0)),
        ]),
        Learner::Rf => map(&[
            ("n_estimators", Int(100)),
            ("max_features", Str("all".into())),
            ("random_state", Int(0)),
        ]),
        Learner::Knn => map(&[
            ("n_neighbors", Int(5)),
            ("weights", Str("uniform".into())),
            ("algorithm", Str("auto".into())),
            ("p", Int(2)),
        ]),
        Learner::Krr => map(&[
            ("alpha", Float(1.0)),
            ("kernel", Str("linear".into())),
            ("degree", Int(3)),
            ("gamma", Float(0.1)),
        ]),
        Learner::Svr => map(&[
            ("C", Float(1.0)),
            ("epsilon", Float(0.1)),
            ("coef0", Float(0.0)),
            ("shrinking", Bool(true)),
            ("tol", Float(1e-3)),
        ]),
    }
}

/// Tracks which keys a learner consumed so leftovers can be rejected.
pub(crate) struct HpReader<'a> {
    learner: &'static str,
    map: &'a HyperParams,
    seen: Vec<&'a str>,
}

impl<'a> HpReader<'a> {
    pub fn new(learner: &'static str, map: &'a HyperParams) -> Self {
        HpReader { learner, map, seen: Vec::new() }
    }

    fn take(&mut self, key: &str) -> Option<&'a HpValue> {
        let (k, v) = self.map.get_key_value(key)?;
        self.seen.push(k);
        Some(v)
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| bad(key, "expected a number")),
        }
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => match v.as_i64() {
                Some(n) if n >= 0 => Ok(n as usize),
                Some(_) => Err(bad(key, "expected a non-negative integer")),
                None => Err(bad(key, "expected an integer")),
            },
        }
    }

    pub fn u64_or(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => match v.as_i64() {
                Some(n) if n >= 0 => Ok(n as u64),
                Some(_) => Err(bad(key, "expected a non-negative integer")),
                None => Err(bad(key, "expected an integer")),
            },
        }
    }

    pub fn str_or(&mut self, key: &str, default: &str) -> Result<String> {
        match self.take(key) {
            None => Ok(default.to_string()),
            Some(v) => v
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| bad(key, "expected a string")),
        }
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| bad(key, "expected a boolean")),
        }
    }

    pub fn raw(&mut self, key: &str) -> Option<&'a HpValue> {
        self.take(key)
    }

    pub fn finish(self) -> Result<()> {
        for key in self.map.keys() {
            if !self.seen.contains(&key.as_str()) {
                return Err(Error::UnknownHyperParam {
                    learner: self.learner.to_string(),
                    key: key.clone(),
                });
            }
        }
        Ok(())
    }
}

pub(crate) fn bad(key: &str, reason: &str) -> Error {
    Error::BadHyperParam { key: key.to_string(), reason: reason.to_string() }
}

/// Fixed feature layout of one space: binary columns first, numeric after,
/// both in declared order. Carried inside every predictor so prediction
/// does not need the space itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub binary_names: Vec<String>,
    pub numeric_names: Vec<String>,
    pub numeric_bounds: Vec<(f64, f64)>,
}

impl Encoding {
    pub fn from_space(space: &ConfigurationSpace) -> Self {
        Encoding {
            binary_names: space.binary_options().iter().map(|o| o.name.clone()).collect(),
            numeric_names: space.numeric_options().iter().map(|o| o.name.clone()).collect(),
            numeric_bounds: space
                .numeric_options()
                .iter()
                .map(|o| (o.min(), o.max()))
                .collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.binary_names.len() + self.numeric_names.len()
    }

    pub fn feature_name(&self, index: usize) -> &str {
        if index < self.binary_names.len() {
            &self.binary_names[index]
        } else {
            &self.numeric_names[index - self.binary_names.len()]
        }
    }

    /// Binary 0/1 followed by raw numeric values.
    pub fn raw(&self, config: &Configuration) -> Vec<f64> {
        let mut x: Vec<f64> =
            config.binary_values().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        x.extend_from_slice(config.numeric_values());
        x
    }

    /// Binary 0/1 followed by numeric values normalized to [0, 1].
    pub fn normalized(&self, config: &Configuration) -> Vec<f64> {
        let mut x: Vec<f64> =
            config.binary_values().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        x.extend(
            config
                .numeric_values()
                .iter()
                .zip(&self.numeric_bounds)
                .map(|(&v, &(lo, hi))| (v - lo) / (hi - lo)),
        );
        x
    }
}

/// Normalized feature vector of one configuration.
pub fn encode(space: &ConfigurationSpace, config: &Configuration) -> Vec<f64> {
    Encoding::from_space(space).normalized(config)
}

/// Measured configurations a learner trains on. Labels must be positive;
/// all rows must come from one space.
#[derive(Debug, Clone)]
pub struct LabeledSet {
    rows: Vec<(Configuration, f64)>,
    fingerprint: u64,
}

impl LabeledSet {
    pub fn new(rows: Vec<(Configuration, f64)>) -> Result<Self> {
        let fingerprint = match rows.first() {
            None => return Err(Error::EmptyLearningSet),
            Some((c, _)) => c.space_fingerprint(),
        };
        for (config, y) in &rows {
            if config.space_fingerprint() != fingerprint {
                return Err(Error::SpaceMismatch);
            }
            if *y <= 0.0 || !y.is_finite() {
                return Err(Error::NonPositiveMeasurement { value: *y });
            }
        }
        Ok(LabeledSet { rows, fingerprint })
    }

    pub fn rows(&self) -> &[(Configuration, f64)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.rows.iter().map(|(_, y)| *y).collect()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
}

/// Trained model state, one variant per learner.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelState {
    Mr(mr::MrModel),
    Cart(cart::TreeModel),
    Rf(forest::ForestModel),
    Knn(knn::KnnModel),
    Krr(krr::KrrModel),
    Svr(svr::SvrModel),
}

/// An immutable trained predictor. Rejects configurations whose space
/// fingerprint differs from the one it was trained on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Predictor {
    pub learner: Learner,
    pub space_fingerprint: u64,
    pub hyper_params: HyperParams,
    pub encoding: Encoding,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub state: ModelState,
}

impl Predictor {
    pub fn predict(&self, config: &Configuration) -> Result<f64> {
        if config.space_fingerprint() != self.space_fingerprint {
            return Err(Error::SpaceMismatch);
        }
        Ok(match &self.state {
            ModelState::Mr(m) => m.predict(&self.encoding.raw(config)),
            ModelState::Cart(m) => m.predict(&self.encoding.raw(config)),
            ModelState::Rf(m) => m.predict(&self.encoding.raw(config)),
            ModelState::Knn(m) => m.predict(&self.encoding.normalized(config)),
            ModelState::Krr(m) => m.predict(&self.encoding.normalized(config)),
            ModelState::Svr(m) => m.predict(&self.encoding.normalized(config)),
        })
    }

    /// Human-readable linear term expansion; present for `mr` models only.
    pub fn term_string(&self) -> Option<String> {
        match &self.state {
            ModelState::Mr(m) => Some(m.term_string(&self.encoding)),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Trains `learner` on `data` under `hp`, validating the hyper-parameter
/// keys and value ranges.
pub fn train(
    learner: Learner,
    space: &ConfigurationSpace,
    data: &LabeledSet,
    hp: &HyperParams,
) -> Result<Predictor> {
    if data.fingerprint() != space.fingerprint() {
        return Err(Error::SpaceMismatch);
    }
    let encoding = Encoding::from_space(space);
    let (state, warnings) = match learner {
        Learner::Mr => mr::fit(&encoding, data, hp)?,
        Learner::Cart => cart::fit(&encoding, data, hp)?,
        Learner::Rf => forest::fit(&encoding, data, hp)?,
        Learner::Knn => knn::fit(&encoding, data, hp)?,
        Learner::Krr => krr::fit(&encoding, data, hp)?,
        Learner::Svr => svr::fit(&encoding, data, hp)?,
    };
    Ok(Predictor {
        learner,
        space_fingerprint: space.fingerprint(),
        hyper_params: hp.clone(),
        encoding,
        warnings,
        state,
    })
}

#[cfg(test)]
mod tests;
