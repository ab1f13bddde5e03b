//! Sampling strategies for the binary sub-space.
//!
//! All strategies work on the exhaustively enumerated set of valid binary
//! assignments (checking only constraints whose atoms lie entirely in the
//! binary sub-space; mixed constraints are applied later, when binary and
//! numeric samples are combined into full configurations). The population
//! is in lexicographic order, which makes every tie-break deterministic:
//! whenever several assignments qualify equally, the lexicographically
//! smallest one wins.

use crate::error::Error;
use crate::rng::Stream;
use crate::space::{BinarySample, ConfigurationSpace, Provenance, SampleSet};
use crate::Result;

fn population(space: &ConfigurationSpace) -> Result<Vec<Vec<bool>>> {
    if space.binary_options().is_empty() {
        return Err(Error::InvalidInput("space has no binary options".into()));
    }
    let pop = space.enumerate_valid_binary()?;
    if pop.is_empty() {
        return Err(Error::InvalidInput(
            "binary sub-space has no valid assignment".into(),
        ));
    }
    Ok(pop)
}

fn enabled(cfg: &[bool]) -> usize {
    cfg.iter().filter(|&&b| b).count()
}

fn dedup(members: Vec<Vec<bool>>) -> Vec<Vec<bool>> {
    let mut seen = std::collections::HashSet::new();
    members.into_iter().filter(|m| seen.insert(m.clone())).collect()
}

/// Option-wise sampling: one configuration per binary option, enabling that
/// option with as few other options enabled as possible. Options that no
/// valid assignment can enable are skipped with a warning.
pub fn sample_option_wise(space: &ConfigurationSpace) -> Result<BinarySample> {
    let pop = population(space)?;
    let mut members = Vec::new();
    let mut provenance = Provenance::new("ow");
    for (i, opt) in space.binary_options().iter().enumerate() {
        let mut best: Option<&Vec<bool>> = None;
        for cfg in pop.iter().filter(|c| c[i]) {
            if best.is_none_or(|b| enabled(cfg) < enabled(b)) {
                best = Some(cfg);
            }
        }
        match best {
            Some(cfg) => members.push(cfg.clone()),
            None => provenance.warnings.push(format!(
                "option `{}` cannot be enabled by any valid assignment; skipped",
                opt.name
            )),
        }
    }
    Ok(SampleSet { members: dedup(members), provenance })
}

/// Negative option-wise sampling: one configuration per binary option,
/// disabling that option with as many other options enabled as possible,
/// plus the all-enabled configuration. If constraints forbid enabling
/// everything at once, the overall maximum-cardinality valid assignment
/// stands in for the all-enabled one (with a warning). Options that cannot
/// be disabled are skipped with a warning.
pub fn sample_negative_option_wise(space: &ConfigurationSpace) -> Result<BinarySample> {
    let pop = population(space)?;
    let mut members = Vec::new();
    let mut provenance = Provenance::new("negow");
    for (i, opt) in space.binary_options().iter().enumerate() {
        let mut best: Option<&Vec<bool>> = None;
        for cfg in pop.iter().filter(|c| !c[i]) {
            if best.is_none_or(|b| enabled(cfg) > enabled(b)) {
                best = Some(cfg);
            }
        }
        match best {
            Some(cfg) => members.push(cfg.clone()),
            None => provenance.warnings.push(format!(
                "option `{}` is mandatory, cannot be disabled; skipped",
                opt.name
            )),
        }
    }
    let all_enabled = vec![true; space.binary_options().len()];
    if pop.contains(&all_enabled) {
        members.push(all_enabled);
    } else {
        let mut best: Option<&Vec<bool>> = None;
        for cfg in &pop {
            if best.is_none_or(|b| enabled(cfg) > enabled(b)) {
                best = Some(cfg);
            }
        }
        provenance.warnings.push(
            "all-enabled configuration violates constraints; \
             using the maximum-cardinality valid assignment instead"
                .into(),
        );
        members.push(best.expect("population is non-empty").clone());
    }
    Ok(SampleSet { members: dedup(members), provenance })
}

/// T-wise sampling: one configuration per satisfiable combination of `t`
/// options enabled together, each with as few other options enabled as
/// possible. Unsatisfiable combinations are skipped with a warning.
pub fn sample_t_wise(space: &ConfigurationSpace, t: usize) -> Result<BinarySample> {
    let pop = population(space)?;
    let n = space.binary_options().len();
    if t == 0 || t > n {
        return Err(Error::InvalidInput(format!(
            "interaction order t={t} must be between 1 and the number of binary options ({n})"
        )));
    }
    let mut members = Vec::new();
    let mut provenance = Provenance::new(format!("t{t}"));
    provenance.params = serde_json::json!({ "t": t });
    for combo in combinations(n, t) {
        let mut best: Option<&Vec<bool>> = None;
        for cfg in pop.iter().filter(|c| combo.iter().all(|&i| c[i])) {
            if best.is_none_or(|b| enabled(cfg) < enabled(b)) {
                best = Some(cfg);
            }
        }
        match best {
            Some(cfg) => members.push(cfg.clone()),
            None => {
                let names: Vec<&str> = combo
                    .iter()
                    .map(|&i| space.binary_options()[i].name.as_str())
                    .collect();
                provenance.warnings.push(format!(
                    "no valid assignment enables ({}) together; combination skipped",
                    names.join(", ")
                ));
            }
        }
    }
    Ok(SampleSet { members: dedup(members), provenance })
}

/// Uniform random sample without replacement from the valid binary
/// assignments, drawn with the documented generator so results are
/// byte-stable across platforms.
pub fn sample_random_binary(
    space: &ConfigurationSpace,
    size: usize,
    seed: u64,
) -> Result<BinarySample> {
    let pop = population(space)?;
    if size > pop.len() {
        return Err(Error::SampleTooLarge { requested: size, available: pop.len() });
    }
    let mut indices: Vec<usize> = (0..pop.len()).collect();
    Stream::new(seed).partial_shuffle(&mut indices, size);
    let members = indices[..size].iter().map(|&i| pop[i].clone()).collect();
    let mut provenance = Provenance::new("rb");
    provenance.seed = Some(seed);
    provenance.requested_size = Some(size);
    Ok(SampleSet { members, provenance })
}

/// All `t`-element index combinations of `0..n` in lexicographic order.
fn combinations(n: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (0..t).collect();
    loop {
        out.push(combo.clone());
        // Advance the rightmost index that can still move.
        let mut i = t;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if combo[i] < n - (t - i) {
                combo[i] += 1;
                for j in i + 1..t {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}
