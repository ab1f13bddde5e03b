//! Random forests: bagged variance-reduction trees averaged at prediction.
//!
//! Every tree draws its own bootstrap resample and feature-subset decisions
//! from a stream seeded by `random_state` and the tree index, so the forest
//! is reproducible and independent of the order in which trees are built.
//! Trees grow to purity (one row per leaf at the extreme) with the `best`
//! splitter; `max_features` controls per-split feature subsampling.

use crate::learners::cart::{grow, CartParams, MaxFeatures, Splitter, TreeModel};
use crate::learners::{bad, Encoding, HpReader, HyperParams, LabeledSet, ModelState};
use crate::parallel::{self, Execution};
use crate::rng::{SeedHasher, Stream};
use crate::Result;
use serde::{Deserialize, Serialize};

pub(crate) struct RfParams {
    pub n_estimators: usize,
    pub max_features: MaxFeatures,
    pub random_state: u64,
}

impl RfParams {
    pub(crate) fn from_hp(hp: &HyperParams) -> Result<Self> {
        let mut r = HpReader::new("rf", hp);
        let n_estimators = r.usize_or("n_estimators", 100)?;
        let max_features = match r.raw("max_features") {
            None => MaxFeatures::All,
            Some(v) => MaxFeatures::parse(v)?,
        };
        let random_state = r.u64_or("random_state", 0)?;
        r.finish()?;
        if n_estimators < 1 {
            return Err(bad("n_estimators", "must be at least 1"));
        }
        Ok(RfParams { n_estimators, max_features, random_state })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

pub(crate) fn fit(
    encoding: &Encoding,
    data: &LabeledSet,
    hp: &HyperParams,
) -> Result<(ModelState, Vec<String>)> {
    let params = RfParams::from_hp(hp)?;
    let model = fit_forest(encoding, data, &params, true);
    Ok((ModelState::Rf(model), Vec::new()))
}

/// Forest fit with an explicit resampling switch; disabling the bootstrap
/// makes a single-tree forest coincide with a plain tree.
pub(crate) fn fit_forest(
    encoding: &Encoding,
    data: &LabeledSet,
    params: &RfParams,
    bootstrap: bool,
) -> ForestModel {
    let rows: Vec<Vec<f64>> = data.rows().iter().map(|(c, _)| encoding.raw(c)).collect();
    let y = data.labels();
    let n = rows.len();
    let width = encoding.width();
    let tree_params = CartParams {
        splitter: Splitter::Best,
        max_features: params.max_features,
        min_samples_leaf: 1,
        random_state: params.random_state,
    };
    let trees = parallel::map_range(Execution::default(), params.n_estimators, |t| {
        let seed = SeedHasher::new(params.random_state)
            .write_str("rf-tree")
            .write_u64(t as u64)
            .finish();
        let mut rng = Stream::new(seed);
        let idx: Vec<usize> = if bootstrap {
            (0..n).map(|_| rng.below(n)).collect()
        } else {
            (0..n).collect()
        };
        TreeModel { root: grow(&rows, &y, idx, &tree_params, width, &mut rng) }
    });
    ForestModel { trees }
}
