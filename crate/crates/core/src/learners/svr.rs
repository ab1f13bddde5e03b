//! Epsilon-insensitive support vector regression.
//!
//! The dual problem is solved as a box-constrained quadratic program over
//! 2n variables (one pair per training row) with a single equality
//! constraint, by repeatedly optimizing the maximal violating pair until
//! the violation gap falls below `tol`. With `shrinking` enabled, variables
//! pinned at their bounds are periodically dropped from pair selection and
//! brought back for a final full-set pass before the solver accepts
//! convergence; gradients are always maintained for the full set, so
//! shrinking changes running time, never results. Hitting the iteration cap
//! returns the current iterate and flags the predictor with a warning.
//!
//! The kernel is a radial basis function whose width defaults to
//! 1 / (width * variance) of the encoded training block; `coef0` only
//! participates when a polynomial kernel is supplied through the internal
//! fitting hook.

use crate::learners::krr::{gram, KernelSpec};
use crate::learners::{bad, Encoding, HpReader, HyperParams, LabeledSet, ModelState};
use crate::Result;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub(crate) const DEFAULT_MAX_ITER: usize = 200_000;
const TAU: f64 = 1e-12;

pub(crate) struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub shrinking: bool,
    pub tol: f64,
}

impl SvrParams {
    pub(crate) fn from_hp(hp: &HyperParams) -> Result<Self> {
        let mut r = HpReader::new("svr", hp);
        let c = r.f64_or("C", 1.0)?;
        let epsilon = r.f64_or("epsilon", 0.1)?;
        // coef0 shapes polynomial kernels only; the radial kernel used here
        // ignores the value, but the key stays accepted.
        r.f64_or("coef0", 0.0)?;
        let shrinking = r.bool_or("shrinking", true)?;
        let tol = r.f64_or("tol", 1e-3)?;
        r.finish()?;
        if c <= 0.0 || c.is_nan() {
            return Err(bad("C", "must be positive"));
        }
        if epsilon < 0.0 || epsilon.is_nan() {
            return Err(bad("epsilon", "must be non-negative"));
        }
        if tol <= 0.0 || tol.is_nan() {
            return Err(bad("tol", "must be positive"));
        }
        Ok(SvrParams { c, epsilon, shrinking, tol })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvrModel {
    pub rows: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
}

impl SvrModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.beta)
            .map(|(r, b)| b * self.kernel.eval(r, x))
            .sum::<f64>()
            + self.bias
    }

    /// Rows whose dual coefficient is nonzero.
    pub fn support_count(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }
}

pub(crate) fn fit(
    encoding: &Encoding,
    data: &LabeledSet,
    hp: &HyperParams,
) -> Result<(ModelState, Vec<String>)> {
    let params = SvrParams::from_hp(hp)?;
    let rows: Vec<Vec<f64>> =
        data.rows().iter().map(|(c, _)| encoding.normalized(c)).collect();
    let width = encoding.width().max(1);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let mean = flat.iter().sum::<f64>() / flat.len() as f64;
    let var = flat.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / flat.len() as f64;
    let gamma = if var > 0.0 { 1.0 / (width as f64 * var) } else { 1.0 / width as f64 };
    let kernel = KernelSpec::Rbf { gamma };
    let (model, warnings) = fit_with(rows, data.labels(), &params, kernel, DEFAULT_MAX_ITER);
    Ok((ModelState::Svr(model), warnings))
}

/// Fit against an explicit kernel and iteration cap.
pub(crate) fn fit_with(
    rows: Vec<Vec<f64>>,
    y: Vec<f64>,
    params: &SvrParams,
    kernel: KernelSpec,
    max_iter: usize,
) -> (SvrModel, Vec<String>) {
    let k = gram(&rows, &kernel);
    let sol = solve_smo(&k, &y, params, max_iter);
    let n = y.len();
    let beta: Vec<f64> = (0..n).map(|i| sol.alpha[i] - sol.alpha[i + n]).collect();
    let mut warnings = Vec::new();
    if !sol.converged {
        warnings.push(format!(
            "svr did not reach tolerance {} within {} iterations; using the best iterate",
            params.tol, sol.iterations
        ));
    }
    (SvrModel { rows, beta, bias: -sol.rho, kernel }, warnings)
}

struct SmoSolution {
    alpha: Vec<f64>,
    rho: f64,
    converged: bool,
    iterations: usize,
}

/// The dual variables are laid out as n "above the tube" multipliers
/// followed by n "below the tube" multipliers; entry t refers to training
/// row t mod n and carries the constraint sign +1 for t < n, -1 otherwise.
fn solve_smo(k: &DMatrix<f64>, y: &[f64], params: &SvrParams, max_iter: usize) -> SmoSolution {
    let n = y.len();
    let l = 2 * n;
    let c = params.c;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = |s: usize, t: usize| sign(s) * sign(t) * k[(s % n, t % n)];

    let mut alpha = vec![0.0f64; l];
    let mut g: Vec<f64> = (0..l)
        .map(|t| if t < n { params.epsilon - y[t] } else { params.epsilon + y[t - n] })
        .collect();
    let mut active = vec![true; l];
    let mut shrink_allowed = params.shrinking;
    let shrink_every = l.clamp(1, 1000);

    let mut iterations = 0usize;
    let mut converged = false;
    loop {
        // Maximal violating pair over the active set.
        let mut up_best = f64::NEG_INFINITY;
        let mut up_idx = None;
        let mut low_best = f64::INFINITY;
        let mut low_idx = None;
        for t in 0..l {
            if !active[t] {
                continue;
            }
            let yt = sign(t);
            let v = -yt * g[t];
            let in_up = (yt > 0.0 && alpha[t] < c) || (yt < 0.0 && alpha[t] > 0.0);
            let in_low = (yt > 0.0 && alpha[t] > 0.0) || (yt < 0.0 && alpha[t] < c);
            if in_up && v > up_best {
                up_best = v;
                up_idx = Some(t);
            }
            if in_low && v < low_best {
                low_best = v;
                low_idx = Some(t);
            }
        }
        let gap = up_best - low_best;
        if up_idx.is_none() || low_idx.is_none() || gap <= params.tol {
            if active.iter().all(|&a| a) {
                converged = true;
                break;
            }
            // Converged on the shrunk set only: reactivate everything and
            // verify against the full problem.
            active.iter_mut().for_each(|a| *a = true);
            shrink_allowed = false;
            continue;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (i, j) = (up_idx.unwrap(), low_idx.unwrap());
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if sign(i) != sign(j) {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, grad) in g.iter_mut().enumerate() {
            *grad += q(t, i) * di + q(t, j) * dj;
        }

        if shrink_allowed && iterations.is_multiple_of(shrink_every) && gap > 10.0 * params.tol
        {
            for (t, slot) in active.iter_mut().enumerate() {
                if *slot && at_bound_and_settled(t, &alpha, &g, c, sign, up_best, low_best) {
                    *slot = false;
                }
            }
            if active.iter().filter(|&&a| a).count() < 2 {
                active.iter_mut().for_each(|a| *a = true);
            }
        }
    }

    // Bias from the gradient: average over free variables, midpoint of the
    // feasible interval when none are free.
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut nr_free = 0usize;
    for t in 0..l {
        let yt = sign(t);
        let yg = yt * g[t];
        if alpha[t] >= c {
            if yt < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if yt > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            nr_free += 1;
            sum_free += yg;
        }
    }
    let rho = if nr_free > 0 { sum_free / nr_free as f64 } else { (ub + lb) / 2.0 };
    SmoSolution { alpha, rho, converged, iterations }
}

/// A bound variable whose gradient pushes it further into the bound cannot
/// re-enter the violating pair until the gap closes, so it can sit out.
fn at_bound_and_settled(
    t: usize,
    alpha: &[f64],
    g: &[f64],
    c: f64,
    sign: impl Fn(usize) -> f64,
    up_best: f64,
    low_best: f64,
) -> bool {
    let yt = sign(t);
    if alpha[t] >= c {
        if yt > 0.0 {
            -g[t] > up_best
        } else {
            -g[t] > -low_best
        }
    } else if alpha[t] <= 0.0 {
        if yt > 0.0 {
            g[t] > -low_best
        } else {
            g[t] > up_best
        }
    } else {
        false
    }
}
