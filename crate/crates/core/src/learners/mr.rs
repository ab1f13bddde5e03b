//! Stepwise multiple linear regression over an expanding term pool.
//!
//! The model starts from an intercept and greedily adds one term per round:
//! every unused base term plus every pairwise product of already selected
//! terms is fitted alongside the current terms by least squares, scored on a
//! held-out slice, and the round's best candidate joins the model. Rounds
//! stop when the relative score improvement drops below `minImprovement`.
//! Base terms are the binary options and numeric powers up to degree four;
//! the extended pool adds logarithms and pairwise ratios of numeric options.
//! Terms are evaluated on raw option values, so the printed formula reads in
//! the units of the configuration space.

use crate::learners::{bad, Encoding, HpReader, HyperParams, LabeledSet, ModelState};
use crate::rng::{SeedHasher, Stream};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

const MAX_POWER: u32 = 4;
/// Relative cutoff on singular values when deciding whether a candidate fit
/// is rank deficient.
const RANK_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Relative,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pool {
    Polynomial,
    Extended,
}

pub(crate) struct MrParams {
    min_improvement: f64,
    loss: Loss,
    pool: Pool,
}

impl MrParams {
    pub(crate) fn from_hp(hp: &HyperParams) -> Result<Self> {
        let mut r = HpReader::new("mr", hp);
        let min_improvement = r.f64_or("minImprovement", 0.01)?;
        let loss = r.str_or("lossFunction", "relative")?;
        let pool = r.str_or("functionTypes", "polynomial")?;
        r.finish()?;
        if min_improvement < 0.0 || min_improvement.is_nan() {
            return Err(bad("minImprovement", "must be non-negative"));
        }
        let loss = match loss.as_str() {
            "relative" => Loss::Relative,
            "absolute" => Loss::Absolute,
            _ => return Err(bad("lossFunction", "expected relative or absolute")),
        };
        let pool = match pool.as_str() {
            "polynomial" => Pool::Polynomial,
            "extended" => Pool::Extended,
            _ => return Err(bad("functionTypes", "expected polynomial or extended")),
        };
        Ok(MrParams { min_improvement, loss, pool })
    }
}

/// One multiplicand of a regression term, indexed into the encoding's
/// binary or numeric feature block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "factor", rename_all = "lowercase")]
pub enum Factor {
    Binary { index: usize },
    Power { index: usize, degree: u32 },
    Log { index: usize },
    Ratio { num: usize, den: usize },
}

impl Factor {
    fn eval(self, x: &[f64], n_binary: usize) -> f64 {
        match self {
            Factor::Binary { index } => x[index],
            Factor::Power { index, degree } => x[n_binary + index].powi(degree as i32),
            Factor::Log { index } => x[n_binary + index].ln(),
            Factor::Ratio { num, den } => x[n_binary + num] / x[n_binary + den],
        }
    }

    fn label(self, encoding: &Encoding) -> String {
        match self {
            Factor::Binary { index } => encoding.binary_names[index].clone(),
            Factor::Power { index, degree: 1 } => encoding.numeric_names[index].clone(),
            Factor::Power { index, degree } => {
                format!("{}^{}", encoding.numeric_names[index], degree)
            }
            Factor::Log { index } => format!("log({})", encoding.numeric_names[index]),
            Factor::Ratio { num, den } => {
                format!("{}/{}", encoding.numeric_names[num], encoding.numeric_names[den])
            }
        }
    }
}

/// Product of factors; an empty factor list is the intercept. Factors are
/// kept in canonical form: binaries deduplicated, powers of the same option
/// merged, everything sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Term {
    pub factors: Vec<Factor>,
}

impl Term {
    pub(crate) fn intercept() -> Term {
        Term { factors: Vec::new() }
    }

    fn single(factor: Factor) -> Term {
        Term { factors: vec![factor] }
    }

    /// Canonical product of two terms.
    pub fn product(&self, other: &Term) -> Term {
        let mut all = self.factors.clone();
        all.extend(other.factors.iter().copied());
        Term::canonical(all)
    }

    fn canonical(factors: Vec<Factor>) -> Term {
        let mut binaries: Vec<usize> = Vec::new();
        let mut powers: Vec<(usize, u32)> = Vec::new();
        let mut rest: Vec<Factor> = Vec::new();
        for f in factors {
            match f {
                Factor::Binary { index } => {
                    if !binaries.contains(&index) {
                        binaries.push(index);
                    }
                }
                Factor::Power { index, degree } => {
                    match powers.iter_mut().find(|(i, _)| *i == index) {
                        Some((_, d)) => *d += degree,
                        None => powers.push((index, degree)),
                    }
                }
                other => rest.push(other),
            }
        }
        let mut out: Vec<Factor> =
            binaries.into_iter().map(|index| Factor::Binary { index }).collect();
        out.extend(powers.into_iter().map(|(index, degree)| Factor::Power { index, degree }));
        out.extend(rest);
        out.sort();
        Term { factors: out }
    }

    fn eval(&self, x: &[f64], n_binary: usize) -> f64 {
        self.factors.iter().map(|f| f.eval(x, n_binary)).product()
    }

    fn label(&self, encoding: &Encoding) -> String {
        self.factors.iter().map(|f| f.label(encoding)).collect::<Vec<_>>().join("*")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MrModel {
    pub terms: Vec<Term>,
    pub coefficients: Vec<f64>,
    pub n_binary: usize,
}

impl MrModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .zip(&self.coefficients)
            .map(|(t, c)| c * t.eval(x, self.n_binary))
            .sum()
    }

    /// Human-readable formula, for example `5.0 + 3.0*a + 2.5*a*n1^2`.
    pub fn term_string(&self, encoding: &Encoding) -> String {
        let mut out = String::new();
        for (i, (term, coef)) in self.terms.iter().zip(&self.coefficients).enumerate() {
            let magnitude = coef.abs();
            if i == 0 {
                if *coef < 0.0 {
                    out.push('-');
                }
            } else if *coef < 0.0 {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            out.push_str(&format!("{magnitude:?}"));
            if !term.factors.is_empty() {
                out.push('*');
                out.push_str(&term.label(encoding));
            }
        }
        out
    }
}

pub(crate) fn fit(
    encoding: &Encoding,
    data: &LabeledSet,
    hp: &HyperParams,
) -> Result<(ModelState, Vec<String>)> {
    let params = MrParams::from_hp(hp)?;
    let n = data.len();
    if n < 2 {
        return Err(crate::Error::NotEnoughRows { context: "mr", needed: 2, got: n });
    }
    let rows: Vec<Vec<f64>> = data.rows().iter().map(|(c, _)| encoding.raw(c)).collect();
    let y = data.labels();
    let n_binary = encoding.binary_names.len();
    let n_numeric = encoding.numeric_names.len();

    // A fifth of the rows validates, chosen by a fixed-seed shuffle: a
    // stride split would concentrate one stratum of cartesian learning
    // sets, whose row order repeats the numeric block periodically. Tiny
    // sets score on the training rows.
    let mut order: Vec<usize> = (0..n).collect();
    Stream::new(SeedHasher::new(0).write_str("mr-validation-split").finish())
        .shuffle(&mut order);
    let (val, train): (Vec<usize>, Vec<usize>) = {
        let (v, t) = order.split_at(n / 5);
        let (mut v, mut t) = (v.to_vec(), t.to_vec());
        v.sort_unstable();
        t.sort_unstable();
        if v.is_empty() {
            ((0..n).collect(), (0..n).collect())
        } else {
            (v, t)
        }
    };

    let mut base: Vec<Term> = Vec::new();
    for index in 0..n_binary {
        base.push(Term::single(Factor::Binary { index }));
    }
    for index in 0..n_numeric {
        for degree in 1..=MAX_POWER {
            base.push(Term::single(Factor::Power { index, degree }));
        }
    }
    if params.pool == Pool::Extended {
        for index in 0..n_numeric {
            base.push(Term::single(Factor::Log { index }));
        }
        for num in 0..n_numeric {
            for den in 0..n_numeric {
                if num != den {
                    base.push(Term::single(Factor::Ratio { num, den }));
                }
            }
        }
    }
    // A term whose value is not finite on some training row (logarithm of
    // zero, division by zero) can never be fitted.
    base.retain(|t| rows.iter().all(|x| t.eval(x, n_binary).is_finite()));

    let mut selected = vec![Term::intercept()];
    let mut score = match solve(&rows, &y, &selected, &train, n_binary, params.loss) {
        Some(coefs) => evaluate(&rows, &y, &selected, &coefs, &val, n_binary, params.loss),
        None => f64::INFINITY,
    };

    loop {
        if score < 1e-12 {
            break;
        }
        let mut seen: HashSet<Term> = selected.iter().cloned().collect();
        let mut candidates: Vec<Term> = Vec::new();
        for t in &base {
            if seen.insert(t.clone()) {
                candidates.push(t.clone());
            }
        }
        let picked: Vec<&Term> =
            selected.iter().filter(|t| !t.factors.is_empty()).collect();
        for (i, a) in picked.iter().enumerate() {
            for b in picked.iter().skip(i) {
                let p = a.product(b);
                if seen.insert(p.clone()) {
                    candidates.push(p);
                }
            }
        }
        let mut best: Option<(f64, Term)> = None;
        for cand in candidates {
            let mut trial = selected.clone();
            trial.push(cand.clone());
            let Some(coefs) = solve(&rows, &y, &trial, &train, n_binary, params.loss) else {
                continue;
            };
            let err = evaluate(&rows, &y, &trial, &coefs, &val, n_binary, params.loss);
            if !err.is_finite() {
                continue;
            }
            if best.as_ref().is_none_or(|(b, _)| err < *b) {
                best = Some((err, cand));
            }
        }
        let Some((err, term)) = best else { eprintln!("DBG no candidate solvable, score {score}"); break };
        eprintln!("DBG score {score} best cand err {err} term {term:?}");
        if score.is_finite() && (score - err) / score < params.min_improvement {
            break;
        }
        selected.push(term);
        score = err;
    }

    // Refit the chosen terms on every row. The training design had full
    // rank, so at worst a numerically borderline term gets dropped here.
    let all: Vec<usize> = (0..n).collect();
    let coefficients = loop {
        match solve(&rows, &y, &selected, &all, n_binary, params.loss) {
            Some(c) => break c,
            None => {
                selected.pop();
            }
        }
    };
    let model = MrModel { terms: selected, coefficients, n_binary };
    Ok((ModelState::Mr(model), Vec::new()))
}

/// Least squares over the given rows; relative loss scales each equation by
/// its target so residuals count proportionally. Returns None when the
/// design matrix is rank deficient.
fn solve(
    rows: &[Vec<f64>],
    y: &[f64],
    terms: &[Term],
    idx: &[usize],
    n_binary: usize,
    loss: Loss,
) -> Option<Vec<f64>> {
    let m = idx.len();
    let k = terms.len();
    if m < k {
        return None;
    }
    let mut a = DMatrix::zeros(m, k);
    let mut b = DVector::zeros(m);
    for (r, &i) in idx.iter().enumerate() {
        let w = match loss {
            Loss::Relative => 1.0 / y[i],
            Loss::Absolute => 1.0,
        };
        for (c, term) in terms.iter().enumerate() {
            a[(r, c)] = w * term.eval(&rows[i], n_binary);
        }
        b[r] = w * y[i];
    }
    let svd = a.svd(true, true);
    let max_sv = svd.singular_values.max();
    if max_sv <= 0.0 {
        return None;
    }
    let eps = max_sv * RANK_EPS;
    if svd.rank(eps) < k {
        return None;
    }
    let sol = svd.solve(&b, eps).ok()?;
    Some(sol.iter().copied().collect())
}

fn evaluate(
    rows: &[Vec<f64>],
    y: &[f64],
    terms: &[Term],
    coefs: &[f64],
    idx: &[usize],
    n_binary: usize,
    loss: Loss,
) -> f64 {
    let total: f64 = idx
        .iter()
        .map(|&i| {
            let pred: f64 = terms
                .iter()
                .zip(coefs)
                .map(|(t, c)| c * t.eval(&rows[i], n_binary))
                .sum();
            match loss {
                Loss::Relative => (pred - y[i]).abs() / y[i],
                Loss::Absolute => (pred - y[i]).abs(),
            }
        })
        .sum();
    total / idx.len() as f64
}
