//! Seeded synthetic systems with a known ground-truth term model.
//!
//! A generated system is a linear combination of an intercept, single-option
//! terms, and products of two or three distinct options; numeric factors
//! carry an exponent up to the spec's degree cap. The measurement table is
//! the model evaluated on every valid configuration, optionally disturbed by
//! a multiplicative Gaussian noise factor. Because the model is returned
//! alongside the table, tests can hold the pipeline against an exact oracle:
//! with zero noise the table equals the model everywhere.

use crate::error::Error;
use crate::learners::mr::{Factor, MrModel, Term};
use crate::rng::{SeedHasher, Stream};
use crate::space::{ConfigurationSpace, MeasurementTable, NumericOption};
use crate::Result;
use serde::{Deserialize, Serialize};

/// How many coefficient draws are attempted before giving up on a model
/// that is positive on every valid configuration.
const COEFFICIENT_ATTEMPTS: u64 = 50;

/// Description of a synthetic system. Binary options are named `b1..`, the
/// numeric ones `n1..` with the given domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSystemSpec {
    pub name: String,
    pub binary_options: usize,
    /// One ascending domain per numeric option.
    pub numeric_domains: Vec<Vec<f64>>,
    /// Number of single-option terms; drawn over distinct options, so at
    /// most one per option.
    pub main_effects: usize,
    /// Number of two-option product terms, drawn over distinct option pairs.
    pub pairwise_terms: usize,
    /// Number of three-option product terms, drawn over distinct triples.
    #[serde(default)]
    pub higher_order_terms: usize,
    /// Largest exponent a numeric factor may receive, between 1 and 4.
    pub degree_cap: u32,
    /// Closed interval coefficients are drawn from, uniformly.
    pub coefficient_range: (f64, f64),
    /// Standard deviation of the relative measurement noise; zero keeps the
    /// table exactly equal to the model.
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticSystemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidInput("synthetic system needs a name".into()));
        }
        if self.binary_options == 0 || self.numeric_domains.is_empty() {
            return Err(Error::InvalidInput(
                "synthetic system needs at least one binary and one numeric option".into(),
            ));
        }
        let options = self.binary_options + self.numeric_domains.len();
        if self.main_effects > options {
            return Err(Error::InvalidInput(format!(
                "{} main effects requested but only {options} options exist",
                self.main_effects
            )));
        }
        if self.pairwise_terms > options * (options - 1) / 2 {
            return Err(Error::InvalidInput(format!(
                "{} pairwise terms requested but only {} option pairs exist",
                self.pairwise_terms,
                options * (options - 1) / 2
            )));
        }
        let triples = if options < 3 { 0 } else { options * (options - 1) * (options - 2) / 6 };
        if self.higher_order_terms > triples {
            return Err(Error::InvalidInput(format!(
                "{} higher-order terms requested but only {triples} option triples exist",
                self.higher_order_terms
            )));
        }
        if !(1..=4).contains(&self.degree_cap) {
            return Err(Error::InvalidInput(format!(
                "degree cap must be between 1 and 4, got {}",
                self.degree_cap
            )));
        }
        let (lo, hi) = self.coefficient_range;
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::InvalidInput(format!(
                "coefficient range ({lo}, {hi}) is not a finite interval"
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "noise level must be finite and non-negative, got {}",
                self.noise
            )));
        }
        Ok(())
    }
}

/// Builds the space, draws a term model, and measures every valid
/// configuration. Coefficients are re-drawn (up to a bounded number of
/// attempts) until the noiseless model is strictly positive everywhere;
/// noisy values are floored at a thousandth of their noiseless value so the
/// table stays positive under extreme noise draws.
pub fn generate_synthetic_system(
    spec: &SyntheticSystemSpec,
) -> Result<(ConfigurationSpace, MrModel, MeasurementTable)> {
    spec.validate()?;
    let k = spec.binary_options;
    let m = spec.numeric_domains.len();
    let binary_names: Vec<String> = (1..=k).map(|i| format!("b{i}")).collect();
    let numeric: Vec<NumericOption> = spec
        .numeric_domains
        .iter()
        .enumerate()
        .map(|(i, domain)| NumericOption { name: format!("n{}", i + 1), domain: domain.clone() })
        .collect();
    let space = ConfigurationSpace::new(binary_names, numeric, &[])?;

    let terms = draw_terms(spec, k, m);
    let rows: Vec<(Vec<f64>, crate::space::Configuration)> = space
        .enumerate_valid()?
        .map(|config| {
            let mut x: Vec<f64> =
                config.binary_values().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            x.extend_from_slice(config.numeric_values());
            (x, config)
        })
        .collect();

    let (lo, hi) = spec.coefficient_range;
    let mut model = None;
    for attempt in 0..COEFFICIENT_ATTEMPTS {
        let mut rng = Stream::new(
            SeedHasher::new(spec.seed).write_str("coefficients").write_u64(attempt).finish(),
        );
        let coefficients: Vec<f64> = terms.iter().map(|_| rng.uniform(lo, hi)).collect();
        let candidate = MrModel { terms: terms.clone(), coefficients, n_binary: k };
        if rows.iter().all(|(x, _)| candidate.predict(x) > 0.0) {
            model = Some(candidate);
            break;
        }
    }
    let model = model.ok_or_else(|| {
        Error::InvalidInput(format!(
            "no strictly positive model found in {COEFFICIENT_ATTEMPTS} coefficient draws; \
             widen or shift the coefficient range"
        ))
    })?;

    let mut noise_rng = Stream::new(SeedHasher::new(spec.seed).write_str("noise").finish());
    let mut table = MeasurementTable::new(spec.name.clone(), "performance");
    for (x, config) in rows {
        let exact = model.predict(&x);
        let noisy = exact * (1.0 + spec.noise * noise_rng.normal());
        table.insert(config, noisy.max(exact * 1e-3))?;
    }
    Ok((space, model, table))
}

/// Draws the term structure: intercept, then main effects over a shuffled
/// option order, then random distinct pairs and triples. Numeric factors
/// get a uniformly drawn exponent in `1..=degree_cap`.
fn draw_terms(spec: &SyntheticSystemSpec, k: usize, m: usize) -> Vec<Term> {
    let options = k + m;
    let mut rng =
        Stream::new(SeedHasher::new(spec.seed).write_str("structure").finish());
    let factor = |opt: usize, rng: &mut Stream| -> Factor {
        if opt < k {
            Factor::Binary { index: opt }
        } else {
            let degree = 1 + rng.below(spec.degree_cap as usize) as u32;
            Factor::Power { index: opt - k, degree }
        }
    };

    let mut terms = vec![Term { factors: Vec::new() }];
    let mut order: Vec<usize> = (0..options).collect();
    rng.shuffle(&mut order);
    for &opt in order.iter().take(spec.main_effects) {
        let f = factor(opt, &mut rng);
        terms.push(Term { factors: vec![f] });
    }

    let mut pairs = Vec::new();
    for i in 0..options {
        for j in (i + 1)..options {
            pairs.push((i, j));
        }
    }
    rng.shuffle(&mut pairs);
    for &(i, j) in pairs.iter().take(spec.pairwise_terms) {
        let a = Term { factors: vec![factor(i, &mut rng)] };
        let b = Term { factors: vec![factor(j, &mut rng)] };
        terms.push(a.product(&b));
    }

    let mut triples = Vec::new();
    for i in 0..options {
        for j in (i + 1)..options {
            for l in (j + 1)..options {
                triples.push((i, j, l));
            }
        }
    }
    rng.shuffle(&mut triples);
    for &(i, j, l) in triples.iter().take(spec.higher_order_terms) {
        let a = Term { factors: vec![factor(i, &mut rng)] };
        let b = Term { factors: vec![factor(j, &mut rng)] };
        let c = Term { factors: vec![factor(l, &mut rng)] };
        terms.push(a.product(&b).product(&c));
    }
    terms
}
