//! Plackett-Burman designs driven by bundled seed vectors.
//!
//! A seed is a length-`n` vector over levels `0..L`; row `i` of the design
//! is the seed cyclically right-shifted `i` positions, truncated to the
//! first `k` columns for a space with `k` numeric options. Level `j` maps
//! to the normalized coordinate `j / (L - 1)` and is then snapped into the
//! option's domain.
//!
//! The bundled seeds for (9 runs, 3 levels), (25, 5), (49, 7), and (125, 5)
//! are cyclic generators built over Galois fields: each is a maximum-length
//! sequence over GF(L) with one zero appended, which makes every level
//! appear exactly `n / L` times in the seed and hence, under cyclic
//! shifting, exactly `n / L` times in every column of the design. A custom
//! seed file (JSON list of objects with `configs`, `levels`, `vector`) can
//! be supplied instead.

use crate::error::Error;
use crate::space::{ConfigurationSpace, NumericSample, Provenance, SampleSet};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use super::{denormalize, dedup_rows, require_numeric};

const BUNDLED: &str = include_str!("../../data/pbd_seeds.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PbdSeed {
    pub configs: usize,
    pub levels: usize,
    pub vector: Vec<usize>,
}

/// Parses and validates a seed file.
pub fn load_pbd_seeds(text: &str) -> Result<Vec<PbdSeed>> {
    let seeds: Vec<PbdSeed> = serde_json::from_str(text)?;
    for s in &seeds {
        if s.levels < 2 {
            return Err(Error::InvalidInput(format!(
                "seed ({}, {}): needs at least 2 levels",
                s.configs, s.levels
            )));
        }
        if s.vector.len() != s.configs {
            return Err(Error::InvalidInput(format!(
                "seed ({}, {}): vector length {} does not match run count",
                s.configs,
                s.levels,
                s.vector.len()
            )));
        }
        if s.vector.iter().any(|&v| v >= s.levels) {
            return Err(Error::InvalidInput(format!(
                "seed ({}, {}): vector entry out of level range",
                s.configs, s.levels
            )));
        }
    }
    Ok(seeds)
}

/// The seeds shipped with the crate.
pub fn bundled_pbd_seeds() -> &'static [PbdSeed] {
    static SEEDS: OnceLock<Vec<PbdSeed>> = OnceLock::new();
    SEEDS.get_or_init(|| load_pbd_seeds(BUNDLED).expect("bundled seed data is valid"))
}

/// Plackett-Burman sample using the bundled seed with the given shape.
pub fn sample_plackett_burman(
    space: &ConfigurationSpace,
    configs: usize,
    levels: usize,
) -> Result<NumericSample> {
    let seed = bundled_pbd_seeds()
        .iter()
        .find(|s| s.configs == configs && s.levels == levels)
        .ok_or(Error::PbdSeedUnknown { configs, levels })?;
    sample_plackett_burman_with(space, seed)
}

/// Plackett-Burman sample from an explicit seed.
pub fn sample_plackett_burman_with(
    space: &ConfigurationSpace,
    seed: &PbdSeed,
) -> Result<NumericSample> {
    let opts = require_numeric(space)?;
    let k = opts.len();
    let n = seed.configs;
    if k > seed.vector.len() {
        return Err(Error::PbdSeedTooShort {
            configs: seed.configs,
            levels: seed.levels,
            seed_len: seed.vector.len(),
            options: k,
        });
    }
    let mut rows = Vec::with_capacity(n);
    for shift in 0..n {
        let row: Vec<f64> = (0..k)
            .map(|c| {
                let level = seed.vector[(c + n - shift % n) % n];
                let u = level as f64 / (seed.levels - 1) as f64;
                denormalize(&opts[c], u)
            })
            .collect();
        rows.push(row);
    }
    let mut provenance = Provenance::new("pbd");
    provenance.params =
        serde_json::json!({ "configs": seed.configs, "levels": seed.levels });
    Ok(SampleSet { members: dedup_rows(rows), provenance })
}
