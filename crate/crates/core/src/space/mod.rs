//! Configuration spaces: options, constraints, configurations, enumeration,
//! sample sets, and measurement tables.
//!
//! A space declares binary options (off/on) and numeric options with finite,
//! strictly ascending value domains, plus constraints that restrict which
//! total assignments are valid. Option order is significant: configurations
//! store their values positionally (binary options first, then numeric), and
//! enumeration is lexicographic in that order.

pub mod constraint;

use crate::error::Error;
use crate::rng::SeedHasher;
use crate::Result;
use constraint::{Constraint, NameTable, Printer};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::io::Write;

/// Default limit on the raw (unconstrained) configuration count that
/// enumeration will walk.
pub const DEFAULT_ENUM_CAP: u128 = 10_000_000;

/// Column name used for the measured value in table CSV files.
pub const PERFORMANCE_COLUMN: &str = "performance";

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryOption {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericOption {
    pub name: String,
    /// Finite domain, at least two values, strictly ascending.
    pub domain: Vec<f64>,
}

impl NumericOption {
    pub fn min(&self) -> f64 {
        self.domain[0]
    }

    pub fn max(&self) -> f64 {
        *self.domain.last().unwrap()
    }
}

/// Declaration of a numeric option in a variability-model file: either an
/// explicit value list or a min/max/step range that is expanded on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumericDecl {
    Values { name: String, values: Vec<f64> },
    Range { name: String, min: f64, max: f64, step: f64 },
}

/// On-disk shape of a variability model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceFile {
    #[serde(default)]
    pub binary: Vec<String>,
    #[serde(default)]
    pub numeric: Vec<NumericDecl>,
    #[serde(default)]
    pub constraints: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ConfigurationSpace {
    binary: Vec<BinaryOption>,
    numeric: Vec<NumericOption>,
    constraints: Vec<Constraint>,
    binary_index: HashMap<String, usize>,
    numeric_index: HashMap<String, usize>,
    fingerprint: u64,
}

impl ConfigurationSpace {
    /// Builds a space from option declarations and constraint texts,
    /// validating names, domains, and constraint references.
    pub fn new(
        binary_names: Vec<String>,
        numeric: Vec<NumericOption>,
        constraint_texts: &[String],
    ) -> Result<Self> {
        let mut binary_index = HashMap::new();
        let mut numeric_index = HashMap::new();
        for (i, name) in binary_names.iter().enumerate() {
            check_name(name)?;
            if binary_index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateOption(name.clone()));
            }
        }
        for (i, opt) in numeric.iter().enumerate() {
            check_name(&opt.name)?;
            if binary_index.contains_key(&opt.name)
                || numeric_index.insert(opt.name.clone(), i).is_some()
            {
                return Err(Error::DuplicateOption(opt.name.clone()));
            }
            check_domain(opt)?;
        }
        let names = NameTable { binary: &binary_index, numeric: &numeric_index };
        let constraints = constraint_texts
            .iter()
            .map(|t| constraint::parse(t, &names))
            .collect::<Result<Vec<_>>>()?;

        let binary: Vec<BinaryOption> =
            binary_names.into_iter().map(|name| BinaryOption { name }).collect();
        let mut space = ConfigurationSpace {
            binary,
            numeric,
            constraints,
            binary_index,
            numeric_index,
            fingerprint: 0,
        };
        // Hash canonical constraint text, not the input text, so that a
        // space and its serialise/parse round trip share one fingerprint.
        let canonical = space.constraint_texts();
        space.fingerprint = fingerprint(&space.binary, &space.numeric, &canonical);
        Ok(space)
    }

    /// Loads a space from variability-model JSON.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpaceFile = serde_json::from_str(text)?;
        let numeric = file
            .numeric
            .into_iter()
            .map(|decl| match decl {
                NumericDecl::Values { name, values } => Ok(NumericOption { name, domain: values }),
                NumericDecl::Range { name, min, max, step } => {
                    if step <= 0.0 {
                        return Err(Error::BadDomain { name, reason: "step must be positive".into() });
                    }
                    let mut domain = Vec::new();
                    let mut i = 0u64;
                    loop {
                        let v = min + i as f64 * step;
                        if v > max + step * 1e-9 {
                            break;
                        }
                        domain.push(v);
                        i += 1;
                    }
                    Ok(NumericOption { name, domain })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        ConfigurationSpace::new(file.binary, numeric, &file.constraints)
    }

    /// Serialises the space back to variability-model JSON. Reloading the
    /// output yields an equal space.
    pub fn to_json(&self) -> String {
        let file = SpaceFile {
            binary: self.binary.iter().map(|o| o.name.clone()).collect(),
            numeric: self
                .numeric
                .iter()
                .map(|o| NumericDecl::Values { name: o.name.clone(), values: o.domain.clone() })
                .collect(),
            constraints: self.constraint_texts(),
        };
        serde_json::to_string_pretty(&file).expect("space serialisation cannot fail")
    }

    pub fn binary_options(&self) -> &[BinaryOption] {
        &self.binary
    }

    pub fn numeric_options(&self) -> &[NumericOption] {
        &self.numeric
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Canonical text of every constraint, in declaration order.
    pub fn constraint_texts(&self) -> Vec<String> {
        let binary_names: Vec<String> = self.binary.iter().map(|o| o.name.clone()).collect();
        let numeric_names: Vec<String> = self.numeric.iter().map(|o| o.name.clone()).collect();
        self.constraints
            .iter()
            .map(|c| {
                Printer {
                    binary_names: &binary_names,
                    numeric_names: &numeric_names,
                    constraint: c,
                }
                .to_string()
            })
            .collect()
    }

    pub fn binary_index(&self, name: &str) -> Option<usize> {
        self.binary_index.get(name).copied()
    }

    pub fn numeric_index(&self, name: &str) -> Option<usize> {
        self.numeric_index.get(name).copied()
    }

    /// All option names in declared order: binary options, then numeric.
    pub fn option_names(&self) -> Vec<&str> {
        self.binary
            .iter()
            .map(|o| o.name.as_str())
            .chain(self.numeric.iter().map(|o| o.name.as_str()))
            .collect()
    }

    /// Identity token tying configurations and predictors to this space.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Unconstrained configuration count: 2^|binary| * product of domain sizes.
    pub fn raw_count(&self) -> u128 {
        let mut n: u128 = 1u128 << self.binary.len().min(127);
        for opt in &self.numeric {
            n = n.saturating_mul(opt.domain.len() as u128);
        }
        n
    }

    /// True when `config` satisfies every constraint. The configuration must
    /// come from this space.
    pub fn is_valid(&self, config: &Configuration) -> bool {
        debug_assert_eq!(config.fingerprint, self.fingerprint);
        self.constraints.iter().all(|c| c.eval(&config.bin, &config.num))
    }

    /// Builds a total configuration, checking arity and domain membership.
    pub fn configuration(&self, bin: Vec<bool>, num: Vec<f64>) -> Result<Configuration> {
        if bin.len() != self.binary.len() || num.len() != self.numeric.len() {
            return Err(Error::InvalidInput(format!(
                "partial assignment: got {}/{} binary and {}/{} numeric values",
                bin.len(),
                self.binary.len(),
                num.len(),
                self.numeric.len()
            )));
        }
        for (i, v) in num.iter().enumerate() {
            if !self.numeric[i].domain.iter().any(|d| d == v) {
                return Err(Error::BadDomain {
                    name: self.numeric[i].name.clone(),
                    reason: format!("value {v} is not a domain member"),
                });
            }
        }
        Ok(Configuration { bin, num, fingerprint: self.fingerprint })
    }

    /// Fast path for values that are known to come from the domains
    /// (enumeration, samplers, learning-set assembly).
    pub(crate) fn configuration_unchecked(&self, bin: Vec<bool>, num: Vec<f64>) -> Configuration {
        Configuration { bin, num, fingerprint: self.fingerprint }
    }

    /// Streams every valid configuration in lexicographic option order
    /// (declared order; binary `0 < 1`, numeric domains ascending; the last
    /// option varies fastest). Errors when the raw product exceeds the cap.
    pub fn enumerate_valid(&self) -> Result<ValidConfigurations<'_>> {
        self.enumerate_valid_capped(DEFAULT_ENUM_CAP)
    }

    pub fn enumerate_valid_capped(&self, cap: u128) -> Result<ValidConfigurations<'_>> {
        let raw = self.raw_count();
        if raw > cap {
            return Err(Error::EnumerationCap { raw, cap });
        }
        Ok(ValidConfigurations { space: self, odometer: Odometer::new(self.radices()), done: false })
    }

    /// Number of valid configurations, subject to the same cap as enumeration.
    pub fn count_valid(&self) -> Result<u64> {
        Ok(self.enumerate_valid()?.count() as u64)
    }

    fn radices(&self) -> Vec<usize> {
        let mut r = vec![2; self.binary.len()];
        r.extend(self.numeric.iter().map(|o| o.domain.len()));
        r
    }

    /// Valid assignments of the binary sub-space in lexicographic order,
    /// checked against binary-only constraints. Constraints that mention
    /// numeric options are deferred to learning-set assembly.
    pub fn enumerate_valid_binary(&self) -> Result<Vec<Vec<bool>>> {
        let raw = 1u128 << self.binary.len().min(127);
        if raw > DEFAULT_ENUM_CAP {
            return Err(Error::EnumerationCap { raw, cap: DEFAULT_ENUM_CAP });
        }
        let relevant: Vec<&Constraint> =
            self.constraints.iter().filter(|c| c.is_binary_only()).collect();
        let mut out = Vec::new();
        let mut odo = Odometer::new(vec![2; self.binary.len()]);
        loop {
            let bin: Vec<bool> = odo.digits.iter().map(|&d| d == 1).collect();
            if relevant.iter().all(|c| c.eval(&bin, &[])) {
                out.push(bin);
            }
            if !odo.advance() {
                break;
            }
        }
        Ok(out)
    }

    /// Valid assignments of the numeric sub-space in lexicographic order,
    /// checked against numeric-only constraints.
    pub fn enumerate_valid_numeric(&self) -> Result<Vec<Vec<f64>>> {
        self.enumerate_valid_numeric_capped(DEFAULT_ENUM_CAP)
    }

    pub fn enumerate_valid_numeric_capped(&self, cap: u128) -> Result<Vec<Vec<f64>>> {
        let mut raw: u128 = 1;
        for opt in &self.numeric {
            raw = raw.saturating_mul(opt.domain.len() as u128);
        }
        if raw > cap {
            return Err(Error::EnumerationCap { raw, cap });
        }
        let relevant: Vec<&Constraint> =
            self.constraints.iter().filter(|c| c.is_numeric_only()).collect();
        let mut out = Vec::new();
        if self.numeric.is_empty() {
            out.push(Vec::new());
            return Ok(out);
        }
        let mut odo = Odometer::new(self.numeric.iter().map(|o| o.domain.len()).collect());
        loop {
            let num: Vec<f64> =
                odo.digits.iter().enumerate().map(|(i, &d)| self.numeric[i].domain[d]).collect();
            if relevant.iter().all(|c| c.eval(&[], &num)) {
                out.push(num);
            }
            if !odo.advance() {
                break;
            }
        }
        Ok(out)
    }
}

fn check_name(name: &str) -> Result<()> {
    let mut chars = name.chars();
    let head_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    let tail_ok = chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !head_ok || !tail_ok {
        return Err(Error::InvalidInput(format!(
            "option name `{name}` must match [A-Za-z_][A-Za-z0-9_]*"
        )));
    }
    if name == PERFORMANCE_COLUMN {
        return Err(Error::InvalidInput(format!(
            "option name `{name}` collides with the measurement column"
        )));
    }
    Ok(())
}

fn check_domain(opt: &NumericOption) -> Result<()> {
    if opt.domain.len() < 2 {
        return Err(Error::BadDomain {
            name: opt.name.clone(),
            reason: format!("domain needs at least 2 values, has {}", opt.domain.len()),
        });
    }
    for w in opt.domain.windows(2) {
        if w[0] >= w[1] || w[0].is_nan() || w[1].is_nan() {
            return Err(Error::BadDomain {
                name: opt.name.clone(),
                reason: format!("domain must be strictly ascending, saw {} then {}", w[0], w[1]),
            });
        }
    }
    if opt.domain.iter().any(|v| !v.is_finite()) {
        return Err(Error::BadDomain { name: opt.name.clone(), reason: "non-finite value".into() });
    }
    Ok(())
}

fn fingerprint(
    binary: &[BinaryOption],
    numeric: &[NumericOption],
    constraints: &[String],
) -> u64 {
    let mut h = SeedHasher::new(0x5ace);
    for o in binary {
        h.write_str(&o.name);
    }
    for o in numeric {
        h.write_str(&o.name);
        for v in &o.domain {
            h.write_u64(v.to_bits());
        }
    }
    for c in constraints {
        h.write_str(c);
    }
    h.finish()
}

/// A total assignment of all options of one space. Values are stored
/// positionally in declared option order.
#[derive(Debug, Clone)]
pub struct Configuration {
    pub(crate) bin: Vec<bool>,
    pub(crate) num: Vec<f64>,
    pub(crate) fingerprint: u64,
}

impl Configuration {
    pub fn binary_values(&self) -> &[bool] {
        &self.bin
    }

    pub fn numeric_values(&self) -> &[f64] {
        &self.num
    }

    pub fn space_fingerprint(&self) -> u64 {
        self.fingerprint
    }
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint
            && self.bin == other.bin
            && self.num.len() == other.num.len()
            && self.num.iter().zip(&other.num).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Eq for Configuration {}

impl Hash for Configuration {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.fingerprint.hash(state);
        self.bin.hash(state);
        for v in &self.num {
            v.to_bits().hash(state);
        }
    }
}

/// Mixed-radix counter in lexicographic order (last digit fastest).
struct Odometer {
    radices: Vec<usize>,
    digits: Vec<usize>,
}

impl Odometer {
    fn new(radices: Vec<usize>) -> Self {
        let digits = vec![0; radices.len()];
        Odometer { radices, digits }
    }

    /// Advances to the next combination; false when wrapped around.
    fn advance(&mut self) -> bool {
        for i in (0..self.digits.len()).rev() {
            self.digits[i] += 1;
            if self.digits[i] < self.radices[i] {
                return true;
            }
            self.digits[i] = 0;
        }
        false
    }
}

/// Iterator over valid configurations; see [`ConfigurationSpace::enumerate_valid`].
pub struct ValidConfigurations<'a> {
    space: &'a ConfigurationSpace,
    odometer: Odometer,
    done: bool,
}

impl Iterator for ValidConfigurations<'_> {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        while !self.done {
            let nb = self.space.binary.len();
            let bin: Vec<bool> = self.odometer.digits[..nb].iter().map(|&d| d == 1).collect();
            let num: Vec<f64> = self.odometer.digits[nb..]
                .iter()
                .enumerate()
                .map(|(i, &d)| self.space.numeric[i].domain[d])
                .collect();
            if !self.odometer.advance() {
                self.done = true;
            }
            if self.space.constraints.iter().all(|c| c.eval(&bin, &num)) {
                return Some(self.space.configuration_unchecked(bin, num));
            }
        }
        None
    }
}

/// Where a sample came from: strategy identifier, parameters, and anything
/// worth surfacing to the user. Written as a JSON sidecar next to sample CSVs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub strategy: String,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requested_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Provenance {
    pub fn new(strategy: impl Into<String>) -> Self {
        Provenance { strategy: strategy.into(), ..Default::default() }
    }
}

/// An ordered, duplicate-free list of sampled assignments plus provenance.
/// `T` is `Vec<bool>` for binary sub-space samples, `Vec<f64>` for numeric
/// ones, and [`Configuration`] for assembled learning sets.
#[derive(Debug, Clone)]
pub struct SampleSet<T> {
    pub members: Vec<T>,
    pub provenance: Provenance,
}

pub type BinarySample = SampleSet<Vec<bool>>;
pub type NumericSample = SampleSet<Vec<f64>>;
pub type ConfigSample = SampleSet<Configuration>;

impl<T> SampleSet<T> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl BinarySample {
    /// Writes one column per binary option (0/1 cells) in declared order.
    pub fn write_csv<W: Write>(&self, space: &ConfigurationSpace, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(space.binary_options().iter().map(|o| o.name.as_str()))?;
        for row in &self.members {
            w.write_record(row.iter().map(|&b| if b { "1" } else { "0" }))?;
        }
        w.flush()?;
        Ok(())
    }
}

impl NumericSample {
    /// Writes one column per numeric option in declared order.
    pub fn write_csv<W: Write>(&self, space: &ConfigurationSpace, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(space.numeric_options().iter().map(|o| o.name.as_str()))?;
        for row in &self.members {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

impl ConfigSample {
    /// Writes all option columns in declared order.
    pub fn write_csv<W: Write>(&self, space: &ConfigurationSpace, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(space.option_names())?;
        for cfg in &self.members {
            let mut rec: Vec<String> =
                cfg.bin.iter().map(|&b| if b { "1" } else { "0" }.to_string()).collect();
            rec.extend(cfg.num.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Measured performance for configurations of one system. Rows keep
/// insertion order; lookups are by configuration.
#[derive(Debug, Clone)]
pub struct MeasurementTable {
    pub system: String,
    pub metric: String,
    rows: IndexMap<Configuration, f64>,
}

impl MeasurementTable {
    pub fn new(system: impl Into<String>, metric: impl Into<String>) -> Self {
        MeasurementTable { system: system.into(), metric: metric.into(), rows: IndexMap::new() }
    }

    /// Inserts one measurement; values must be strictly positive (relative
    /// error is undefined otherwise) and configurations unique.
    pub fn insert(&mut self, config: Configuration, value: f64) -> Result<()> {
        if value <= 0.0 || value.is_nan() {
            return Err(Error::NonPositiveMeasurement { value });
        }
        if self.rows.contains_key(&config) {
            return Err(Error::InvalidInput("duplicate configuration in measurement table".into()));
        }
        self.rows.insert(config, value);
        Ok(())
    }

    pub fn get(&self, config: &Configuration) -> Option<f64> {
        self.rows.get(config).copied()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Configuration, f64)> {
        self.rows.iter().map(|(c, &v)| (c, v))
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.values().copied()
    }

    /// Writes the table as CSV: option columns in declared order, then the
    /// `performance` column.
    pub fn write_csv<W: Write>(&self, space: &ConfigurationSpace, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = space.option_names();
        header.push(PERFORMANCE_COLUMN);
        w.write_record(&header)?;
        for (cfg, value) in self.iter() {
            let mut rec: Vec<String> =
                cfg.bin.iter().map(|&b| if b { "1" } else { "0" }.to_string()).collect();
            rec.extend(cfg.num.iter().map(|v| v.to_string()));
            rec.push(value.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests;
