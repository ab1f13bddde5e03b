//! Design-of-experiments sampling for the numeric sub-space.
//!
//! Designs are constructed in a normalized per-option coordinate `u` where 0
//! is the domain minimum and 1 the maximum, then mapped back and snapped to
//! the nearest domain member (ties toward the smaller value). Every emitted
//! value is therefore a member of its option's domain. Geometric designs
//! (one-factor-at-a-time, Box-Behnken, central composite, Plackett-Burman)
//! place points without consulting constraints; invalid combinations are
//! dropped later when binary and numeric samples are assembled into full
//! configurations. The candidate-pool strategies (D-optimal, random) draw
//! from the enumerated numeric sub-space and respect constraints whose atoms
//! are all numeric.

pub mod dod;
pub mod pbd;

pub use dod::{
    quadratic_model, sample_d_optimal, sample_d_optimal_with, ModelTerm, CANDIDATE_CAP,
    DEFAULT_RESTARTS,
};
pub use pbd::{
    bundled_pbd_seeds, load_pbd_seeds, sample_plackett_burman, sample_plackett_burman_with,
    PbdSeed,
};

use crate::error::Error;
use crate::rng::Stream;
use crate::space::{ConfigurationSpace, NumericOption, NumericSample, Provenance, SampleSet};
use crate::Result;

/// Maps a domain value to [0, 1].
pub fn normalize(opt: &NumericOption, value: f64) -> f64 {
    (value - opt.min()) / (opt.max() - opt.min())
}

/// Maps a normalized coordinate back into the domain, snapping to the
/// nearest member; when two members are equally near, the smaller one wins.
pub fn denormalize(opt: &NumericOption, u: f64) -> f64 {
    let raw = opt.min() + u * (opt.max() - opt.min());
    let mut best = opt.domain[0];
    let mut best_dist = (raw - best).abs();
    for &v in &opt.domain[1..] {
        let d = (raw - v).abs();
        if d < best_dist {
            best = v;
            best_dist = d;
        }
    }
    best
}

fn require_numeric(space: &ConfigurationSpace) -> Result<&[NumericOption]> {
    let opts = space.numeric_options();
    if opts.is_empty() {
        return Err(Error::InvalidInput("space has no numeric options".into()));
    }
    Ok(opts)
}

/// Maps a design point in normalized coordinates onto domain members.
fn snap_point(opts: &[NumericOption], point: &[f64]) -> Vec<f64> {
    opts.iter().zip(point).map(|(o, &u)| denormalize(o, u)).collect()
}

fn dedup_rows(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut seen = std::collections::HashSet::new();
    rows.into_iter()
        .filter(|r| seen.insert(r.iter().map(|v| v.to_bits()).collect::<Vec<_>>()))
        .collect()
}

pub(crate) fn numeric_population(space: &ConfigurationSpace) -> Result<Vec<Vec<f64>>> {
    require_numeric(space)?;
    let pop = space.enumerate_valid_numeric()?;
    if pop.is_empty() {
        return Err(Error::InvalidInput("numeric sub-space has no valid assignment".into()));
    }
    Ok(pop)
}

/// One-factor-at-a-time design: the all-center point, plus `levels - 1`
/// variations per option along `levels` equidistant normalized levels. The
/// level nearest the center is covered by the center point and dropped
/// (ties toward the smaller level), so the size before deduplication is
/// exactly `options * (levels - 1) + 1`.
pub fn sample_ofat(space: &ConfigurationSpace, levels: usize) -> Result<NumericSample> {
    let opts = require_numeric(space)?;
    if levels < 2 {
        return Err(Error::InvalidInput(format!("levels must be at least 2, got {levels}")));
    }
    let grid: Vec<f64> = (0..levels).map(|i| i as f64 / (levels - 1) as f64).collect();
    let drop = grid
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (*a - 0.5).abs().partial_cmp(&(*b - 0.5).abs()).unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();

    let center = vec![0.5; opts.len()];
    let mut rows = vec![snap_point(opts, &center)];
    for i in 0..opts.len() {
        for (j, &u) in grid.iter().enumerate() {
            if j == drop {
                continue;
            }
            let mut point = center.clone();
            point[i] = u;
            rows.push(snap_point(opts, &point));
        }
    }
    let mut provenance = Provenance::new("ofat");
    provenance.params = serde_json::json!({ "levels": levels });
    Ok(SampleSet { members: dedup_rows(rows), provenance })
}

/// Box-Behnken design: for every option pair the four min/max combinations
/// with all other options at the center, plus the all-center point. Needs at
/// least three numeric options; size before deduplication is
/// `2k(k-1) + 1`.
pub fn sample_box_behnken(space: &ConfigurationSpace) -> Result<NumericSample> {
    let opts = require_numeric(space)?;
    let k = opts.len();
    if k < 3 {
        return Err(Error::BoxBehnkenTooFew(k));
    }
    let mut rows = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                let mut point = vec![0.5; k];
                point[i] = a;
                point[j] = b;
                rows.push(snap_point(opts, &point));
            }
        }
    }
    rows.push(snap_point(opts, &vec![0.5; k]));
    Ok(SampleSet { members: dedup_rows(rows), provenance: Provenance::new("bbd") })
}

/// Default cap on the factorial portion of a central composite design.
pub const CCI_FACTORIAL_CAP: usize = 1 << 20;

/// Inscribed central composite design with factorial corners at
/// `0.5 +- alpha/2` per axis, axial points at distance `alpha` from the
/// center, and the center itself: `2^k + 2k + 1` points before dedup.
pub fn sample_central_composite(
    space: &ConfigurationSpace,
    alpha: f64,
) -> Result<NumericSample> {
    sample_central_composite_capped(space, alpha, CCI_FACTORIAL_CAP)
}

pub fn sample_central_composite_capped(
    space: &ConfigurationSpace,
    alpha: f64,
    cap: usize,
) -> Result<NumericSample> {
    let opts = require_numeric(space)?;
    let k = opts.len();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must be in (0, 1), got {alpha}")));
    }
    if k >= usize::BITS as usize || (1usize << k) > cap {
        return Err(Error::FactorialCap { options: k, cap });
    }
    let mut rows = Vec::new();
    // Factorial corners, low sign before high, first option most significant.
    for m in 0..(1usize << k) {
        let point: Vec<f64> = (0..k)
            .map(|pos| {
                let high = (m >> (k - 1 - pos)) & 1 == 1;
                if high {
                    0.5 + alpha / 2.0
                } else {
                    0.5 - alpha / 2.0
                }
            })
            .collect();
        rows.push(snap_point(opts, &point));
    }
    // Axial points at distance alpha, low before high per option.
    for i in 0..k {
        for u in [0.5 - alpha, 0.5 + alpha] {
            let mut point = vec![0.5; k];
            point[i] = u;
            rows.push(snap_point(opts, &point));
        }
    }
    rows.push(snap_point(opts, &vec![0.5; k]));
    let mut provenance = Provenance::new("cci");
    provenance.params = serde_json::json!({ "alpha": alpha });
    Ok(SampleSet { members: dedup_rows(rows), provenance })
}

/// Uniform random sample without replacement from the valid numeric
/// sub-space, in lexicographic population order shuffled by the documented
/// generator.
pub fn sample_random_numeric(
    space: &ConfigurationSpace,
    size: usize,
    seed: u64,
) -> Result<NumericSample> {
    let pop = numeric_population(space)?;
    if size > pop.len() {
        return Err(Error::SampleTooLarge { requested: size, available: pop.len() });
    }
    let mut indices: Vec<usize> = (0..pop.len()).collect();
    Stream::new(seed).partial_shuffle(&mut indices, size);
    let members = indices[..size].iter().map(|&i| pop[i].clone()).collect();
    let mut provenance = Provenance::new("rn");
    provenance.seed = Some(seed);
    provenance.requested_size = Some(size);
    Ok(SampleSet { members, provenance })
}
