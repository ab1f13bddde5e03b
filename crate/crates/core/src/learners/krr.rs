//! Kernel ridge regression in its dual form.
//!
//! Training solves (K + alpha I) c = y for the dual coefficients c, where K
//! is the kernel Gram matrix of the normalized training rows; prediction is
//! the kernel row of the probe against those coefficients. alpha = 0 is
//! accepted as long as the system stays solvable; an exactly singular
//! system is reported as an error suggesting a positive alpha. The
//! polynomial kernel is (gamma <x, x'> + coef0)^degree with coef0 fixed at
//! 1, mirroring the common library default, since the parameter set exposes
//! no coef0 for this learner.

use crate::error::Error;
use crate::learners::{bad, Encoding, HpReader, HyperParams, LabeledSet, ModelState};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A kernel function over normalized feature vectors, shared by the
/// kernel-based learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Polynomial { gamma: f64, coef0: f64, degree: u32 },
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let dot = || a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        match self {
            KernelSpec::Linear => dot(),
            KernelSpec::Polynomial { gamma, coef0, degree } => {
                (gamma * dot() + coef0).powi(*degree as i32)
            }
            KernelSpec::Rbf { gamma } => {
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * sq).exp()
            }
        }
    }
}

pub(crate) struct KrrParams {
    pub alpha: f64,
    pub kernel: KernelSpec,
}

impl KrrParams {
    pub(crate) fn from_hp(hp: &HyperParams) -> Result<Self> {
        let mut r = HpReader::new("krr", hp);
        let alpha = r.f64_or("alpha", 1.0)?;
        let kernel_name = r.str_or("kernel", "linear")?;
        let degree = r.usize_or("degree", 3)?;
        let gamma = r.f64_or("gamma", 0.1)?;
        r.finish()?;
        if alpha < 0.0 || alpha.is_nan() {
            return Err(bad("alpha", "must be non-negative"));
        }
        if degree < 1 {
            return Err(bad("degree", "must be at least 1"));
        }
        if gamma <= 0.0 || gamma.is_nan() {
            return Err(bad("gamma", "must be positive"));
        }
        let kernel = match kernel_name.as_str() {
            "linear" => KernelSpec::Linear,
            "polynomial" => {
                KernelSpec::Polynomial { gamma, coef0: 1.0, degree: degree as u32 }
            }
            "rbf" => KernelSpec::Rbf { gamma },
            _ => return Err(bad("kernel", "expected linear, polynomial, or rbf")),
        };
        Ok(KrrParams { alpha, kernel })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrrModel {
    pub rows: Vec<Vec<f64>>,
    pub dual: Vec<f64>,
    pub kernel: KernelSpec,
}

impl KrrModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.dual)
            .map(|(r, c)| c * self.kernel.eval(r, x))
            .sum()
    }
}

/// Symmetric Gram matrix of `rows` under `kernel`.
pub(crate) fn gram(rows: &[Vec<f64>], kernel: &KernelSpec) -> DMatrix<f64> {
    let n = rows.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&rows[i], &rows[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

pub(crate) fn fit(
    encoding: &Encoding,
    data: &LabeledSet,
    hp: &HyperParams,
) -> Result<(ModelState, Vec<String>)> {
    let params = KrrParams::from_hp(hp)?;
    let rows: Vec<Vec<f64>> =
        data.rows().iter().map(|(c, _)| encoding.normalized(c)).collect();
    let mut k = gram(&rows, &params.kernel);
    for i in 0..rows.len() {
        k[(i, i)] += params.alpha;
    }
    let y = DVector::from_vec(data.labels());
    let dual = k.lu().solve(&y).ok_or(Error::SingularKernel)?;
    let model = KrrModel { rows, dual: dual.iter().copied().collect(), kernel: params.kernel };
    Ok((ModelState::Krr(model), Vec::new()))
}
