//! k-nearest-neighbors regression over normalized feature vectors.
//!
//! Prediction averages the labels of the `n_neighbors` rows closest under
//! the Minkowski distance with exponent `p`, ordered by (distance, row
//! index) so boundary ties resolve deterministically. With `distance`
//! weights each neighbor contributes proportionally to 1/distance; a probe
//! that coincides with stored rows returns the mean label of the exact
//! matches instead. The `algorithm` key selects only the neighbor-search
//! plumbing and never changes results; every value runs the exhaustive
//! scan.

use crate::error::Error;
use crate::learners::{bad, Encoding, HpReader, HyperParams, LabeledSet, ModelState};
use crate::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weights {
    Uniform,
    Distance,
}

pub(crate) struct KnnParams {
    pub n_neighbors: usize,
    pub weights: Weights,
    pub p: f64,
}

impl KnnParams {
    pub(crate) fn from_hp(hp: &HyperParams) -> Result<Self> {
        let mut r = HpReader::new("knn", hp);
        let n_neighbors = r.usize_or("n_neighbors", 5)?;
        let weights = match r.str_or("weights", "uniform")?.as_str() {
            "uniform" => Weights::Uniform,
            "distance" => Weights::Distance,
            _ => return Err(bad("weights", "expected uniform or distance")),
        };
        let algorithm = r.str_or("algorithm", "auto")?;
        let p = r.f64_or("p", 2.0)?;
        r.finish()?;
        if n_neighbors < 1 {
            return Err(bad("n_neighbors", "must be at least 1"));
        }
        if !["auto", "brute", "ball_tree", "kd_tree"].contains(&algorithm.as_str()) {
            return Err(bad("algorithm", "expected auto, brute, ball_tree, or kd_tree"));
        }
        if p < 1.0 || p.is_nan() {
            return Err(bad("p", "must be at least 1"));
        }
        Ok(KnnParams { n_neighbors, weights, p })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub n_neighbors: usize,
    pub weights: Weights,
    pub p: f64,
}

fn minkowski(a: &[f64], b: &[f64], p: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

impl KnnModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut by_distance: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (minkowski(r, x, self.p), i))
            .collect();
        by_distance.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let nearest = &by_distance[..self.n_neighbors];
        match self.weights {
            Weights::Uniform => {
                nearest.iter().map(|&(_, i)| self.labels[i]).sum::<f64>()
                    / nearest.len() as f64
            }
            Weights::Distance => {
                if nearest[0].0 == 0.0 {
                    let exact: Vec<f64> = by_distance
                        .iter()
                        .take_while(|(d, _)| *d == 0.0)
                        .map(|&(_, i)| self.labels[i])
                        .collect();
                    return exact.iter().sum::<f64>() / exact.len() as f64;
                }
                let weight_sum: f64 = nearest.iter().map(|(d, _)| 1.0 / d).sum();
                nearest.iter().map(|&(d, i)| self.labels[i] / d).sum::<f64>() / weight_sum
            }
        }
    }
}

pub(crate) fn fit(
    encoding: &Encoding,
    data: &LabeledSet,
    hp: &HyperParams,
) -> Result<(ModelState, Vec<String>)> {
    let params = KnnParams::from_hp(hp)?;
    if params.n_neighbors > data.len() {
        return Err(Error::NotEnoughRows {
            context: "knn",
            needed: params.n_neighbors,
            got: data.len(),
        });
    }
    let model = KnnModel {
        rows: data.rows().iter().map(|(c, _)| encoding.normalized(c)).collect(),
        labels: data.labels(),
        n_neighbors: params.n_neighbors,
        weights: params.weights,
        p: params.p,
    };
    Ok((ModelState::Knn(model), Vec::new()))
}
