//! D-optimal designs over the valid numeric sub-space.
//!
//! The design is chosen from the enumerated pool of valid numeric
//! assignments to maximize the determinant of the information matrix of a
//! quadratic response model (intercept, one linear term per option, one
//! quadratic term per option whose domain has at least three members; a
//! two-member domain makes the quadratic column equal the linear one in
//! normalized coordinates). Optimization is a single-point Fedorov
//! exchange: starting from a random nonsingular subset, design points are
//! visited in ascending leverage order and the first candidate swap that
//! increases the determinant is applied, until no swap improves it. Several
//! seeded restarts run independently (in parallel when enabled) and the
//! design with the largest final determinant wins, earliest restart on ties.

use crate::error::Error;
use crate::parallel::{self, Execution};
use crate::rng::{SeedHasher, Stream};
use crate::space::{ConfigurationSpace, NumericOption, NumericSample, Provenance, SampleSet};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use std::collections::HashSet;

use super::{normalize, numeric_population, require_numeric};

/// Restarts used by [`sample_d_optimal`].
pub const DEFAULT_RESTARTS: usize = 5;

/// Largest candidate pool the exchange scans; bigger pools are thinned to a
/// seeded subset of this size first.
pub const CANDIDATE_CAP: usize = 20_000;

const SINGULAR_TOL: f64 = 1e-12;
const IMPROVE_TOL: f64 = 1e-12;
const MAX_REDRAWS: usize = 64;

/// One column of the response model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTerm {
    Intercept,
    Linear(usize),
    Quadratic(usize),
}

impl ModelTerm {
    /// Evaluates the term at a point in normalized coordinates.
    pub fn eval(self, u: &[f64]) -> f64 {
        match self {
            ModelTerm::Intercept => 1.0,
            ModelTerm::Linear(i) => u[i],
            ModelTerm::Quadratic(i) => u[i] * u[i],
        }
    }

    fn label(self, opts: &[NumericOption]) -> String {
        match self {
            ModelTerm::Intercept => "intercept".into(),
            ModelTerm::Linear(i) => opts[i].name.clone(),
            ModelTerm::Quadratic(i) => format!("{}^2", opts[i].name),
        }
    }
}

/// The quadratic model fitted by the design: intercept and linear terms for
/// every option, quadratic terms only where the domain can support them.
pub fn quadratic_model(opts: &[NumericOption]) -> Vec<ModelTerm> {
    let mut terms = vec![ModelTerm::Intercept];
    terms.extend((0..opts.len()).map(ModelTerm::Linear));
    terms.extend(
        opts.iter()
            .enumerate()
            .filter(|(_, o)| o.domain.len() >= 3)
            .map(|(i, _)| ModelTerm::Quadratic(i)),
    );
    terms
}

/// D-optimal sample with the default restart count and execution mode.
pub fn sample_d_optimal(
    space: &ConfigurationSpace,
    size: usize,
    seed: u64,
) -> Result<NumericSample> {
    sample_d_optimal_with(space, size, seed, DEFAULT_RESTARTS, Execution::default())
}

pub fn sample_d_optimal_with(
    space: &ConfigurationSpace,
    size: usize,
    seed: u64,
    restarts: usize,
    exec: Execution,
) -> Result<NumericSample> {
    let opts = require_numeric(space)?;
    let terms = quadratic_model(opts);
    let p = terms.len();
    if size < p {
        return Err(Error::InvalidInput(format!(
            "design size {size} is below the {p} terms of the quadratic model"
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidInput("restarts must be at least 1".into()));
    }
    let mut pool = numeric_population(space)?;
    if size > pool.len() {
        return Err(Error::SampleTooLarge { requested: size, available: pool.len() });
    }
    if pool.len() > CANDIDATE_CAP {
        let pool_seed = SeedHasher::new(seed).write_str("dod-pool").finish();
        Stream::new(pool_seed).partial_shuffle(&mut pool, CANDIDATE_CAP);
        pool.truncate(CANDIDATE_CAP);
        pool.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let model_rows: Vec<DVector<f64>> = pool
        .iter()
        .map(|row| {
            let u: Vec<f64> =
                opts.iter().zip(row).map(|(o, &v)| normalize(o, v)).collect();
            DVector::from_iterator(p, terms.iter().map(|t| t.eval(&u)))
        })
        .collect();

    let outcomes = parallel::map_range(exec, restarts, |r| {
        let restart_seed =
            SeedHasher::new(seed).write_str("dod-restart").write_u64(r as u64).finish();
        run_restart(&model_rows, size, restart_seed)
    });

    let mut best: Option<(usize, &Restart)> = None;
    for (r, out) in outcomes.iter().enumerate() {
        if let Some(out) = out {
            if best.is_none_or(|(_, b)| out.final_det > b.final_det) {
                best = Some((r, out));
            }
        }
    }
    let (_, winner) = best.ok_or(Error::CandidateDeficient)?;
    let mut members: Vec<Vec<f64>> =
        winner.indices.iter().map(|&i| pool[i].clone()).collect();
    members.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut provenance = Provenance::new("dod");
    provenance.seed = Some(seed);
    provenance.requested_size = Some(size);
    provenance.params = serde_json::json!({
        "model_terms": terms.iter().map(|t| t.label(opts)).collect::<Vec<_>>(),
        "candidate_pool": pool.len(),
        "restarts": outcomes
            .iter()
            .map(|o| match o {
                Some(o) => serde_json::json!({
                    "initial_det": o.initial_det,
                    "final_det": o.final_det,
                }),
                None => serde_json::json!({ "singular": true }),
            })
            .collect::<Vec<_>>(),
    });
    Ok(SampleSet { members, provenance })
}

struct Restart {
    indices: Vec<usize>,
    initial_det: f64,
    final_det: f64,
}

fn information(rows: &[DVector<f64>], design: &[usize]) -> DMatrix<f64> {
    let p = rows[0].len();
    let mut info = DMatrix::zeros(p, p);
    for &i in design {
        info += &rows[i] * rows[i].transpose();
    }
    info
}

fn run_restart(rows: &[DVector<f64>], size: usize, seed: u64) -> Option<Restart> {
    let mut rng = Stream::new(seed);
    let mut order: Vec<usize> = (0..rows.len()).collect();

    let mut design = Vec::new();
    let mut info = DMatrix::zeros(0, 0);
    let mut det = 0.0;
    for _ in 0..MAX_REDRAWS {
        rng.partial_shuffle(&mut order, size);
        design = order[..size].to_vec();
        info = information(rows, &design);
        det = info.determinant();
        if det > SINGULAR_TOL {
            break;
        }
    }
    if det <= SINGULAR_TOL {
        return None;
    }
    let initial_det = det;

    // A swap must grow the determinant by a fixed relative margin and no
    // subset can repeat, so the loop terminates; the round cap only guards
    // against cycling through rounding error in the acceptance test.
    let mut rounds = 0usize;
    'round: loop {
        rounds += 1;
        if rounds > 10_000 {
            break;
        }
        let inv = match info.clone().try_inverse() {
            Some(m) => m,
            None => break,
        };
        let leverage: Vec<f64> =
            rows.iter().map(|x| (x.transpose() * &inv * x)[(0, 0)]).collect();
        let mut positions: Vec<usize> = (0..design.len()).collect();
        positions.sort_by(|&a, &b| {
            leverage[design[a]].partial_cmp(&leverage[design[b]]).unwrap()
        });
        let in_design: HashSet<usize> = design.iter().copied().collect();
        for pos in positions {
            let old = design[pos];
            let dx = leverage[old];
            let mx = &inv * &rows[old];
            for (j, y) in rows.iter().enumerate() {
                if in_design.contains(&j) {
                    continue;
                }
                let dxy = y.dot(&mx);
                let factor = (1.0 - dx) * (1.0 + leverage[j]) + dxy * dxy;
                if factor > 1.0 + IMPROVE_TOL {
                    design[pos] = j;
                    info -= &rows[old] * rows[old].transpose();
                    info += y * y.transpose();
                    continue 'round;
                }
            }
        }
        break;
    }
    let final_det = info.determinant();
    Some(Restart { indices: design, initial_det, final_det })
}
