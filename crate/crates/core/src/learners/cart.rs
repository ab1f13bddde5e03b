//! Binary regression trees split by variance reduction.
//!
//! Nodes test `feature <= threshold`; the left branch takes the rows where
//! the test holds. Thresholds sit at midpoints between adjacent distinct
//! values of a feature, which places every binary split at 0.5. The `best`
//! splitter maximizes the drop in summed squared error over a per-node
//! random subset of `max_features` non-constant features, scanning more
//! features only while no valid split has been found; the `random` splitter
//! draws one uniform threshold per candidate feature and keeps the best of
//! those. A split is valid only when both children hold at least
//! `min_samples_leaf` rows.

use crate::learners::{bad, Encoding, HpReader, HpValue, HyperParams, LabeledSet, ModelState};
use crate::rng::Stream;
use crate::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Splitter {
    Best,
    Random,
}

/// How many features each node considers, resolved against the encoding
/// width at fit time.
#[derive(Debug, Clone, Copy)]
pub(crate) enum MaxFeatures {
    All,
    Sqrt,
    Log2,
    Count(usize),
    Fraction(f64),
}

impl MaxFeatures {
    pub(crate) fn parse(value: &HpValue) -> Result<Self> {
        match value {
            HpValue::Str(s) => match s.as_str() {
                "all" => Ok(MaxFeatures::All),
                "sqrt" => Ok(MaxFeatures::Sqrt),
                "log2" => Ok(MaxFeatures::Log2),
                _ => Err(bad("max_features", "expected all, sqrt, log2, a count, or a fraction")),
            },
            HpValue::Int(n) if *n >= 1 => Ok(MaxFeatures::Count(*n as usize)),
            HpValue::Float(f) if *f > 0.0 && *f <= 1.0 => Ok(MaxFeatures::Fraction(*f)),
            _ => Err(bad("max_features", "expected all, sqrt, log2, a count, or a fraction")),
        }
    }

    pub(crate) fn resolve(self, width: usize) -> usize {
        let raw = match self {
            MaxFeatures::All => width,
            MaxFeatures::Sqrt => (width as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 => (width as f64).log2().floor() as usize,
            MaxFeatures::Count(n) => n,
            MaxFeatures::Fraction(f) => (f * width as f64).floor() as usize,
        };
        raw.clamp(1, width)
    }
}

pub(crate) struct CartParams {
    pub splitter: Splitter,
    pub max_features: MaxFeatures,
    pub min_samples_leaf: usize,
    pub random_state: u64,
}

impl CartParams {
    pub(crate) fn from_hp(hp: &HyperParams) -> Result<Self> {
        let mut r = HpReader::new("cart", hp);
        let splitter = match r.str_or("splitter", "best")?.as_str() {
            "best" => Splitter::Best,
            "random" => Splitter::Random,
            _ => return Err(bad("splitter", "expected best or random")),
        };
        let max_features = match r.raw("max_features") {
            None => MaxFeatures::All,
            Some(v) => MaxFeatures::parse(v)?,
        };
        let min_samples_leaf = r.usize_or("min_samples_leaf", 1)?;
        let random_state = r.u64_or("random_state", 0)?;
        r.finish()?;
        if min_samples_leaf < 1 {
            return Err(bad("min_samples_leaf", "must be at least 1"));
        }
        Ok(CartParams { splitter, max_features, min_samples_leaf, random_state })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, left: Box<TreeNode>, right: Box<TreeNode> },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: TreeNode,
}

impl TreeModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }
}

pub(crate) fn fit(
    encoding: &Encoding,
    data: &LabeledSet,
    hp: &HyperParams,
) -> Result<(ModelState, Vec<String>)> {
    let params = CartParams::from_hp(hp)?;
    let rows: Vec<Vec<f64>> = data.rows().iter().map(|(c, _)| encoding.raw(c)).collect();
    let y = data.labels();
    let mut rng = Stream::new(params.random_state);
    let idx: Vec<usize> = (0..rows.len()).collect();
    let root = grow(&rows, &y, idx, &params, encoding.width(), &mut rng);
    Ok((ModelState::Cart(TreeModel { root }), Vec::new()))
}

pub(crate) fn grow(
    rows: &[Vec<f64>],
    y: &[f64],
    idx: Vec<usize>,
    params: &CartParams,
    width: usize,
    rng: &mut Stream,
) -> TreeNode {
    let n = idx.len();
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n as f64;
    let pure = idx.iter().all(|&i| y[i] == y[idx[0]]);
    if pure || n < 2 * params.min_samples_leaf {
        return TreeNode::Leaf { value: mean };
    }
    match best_split(rows, y, &idx, params, width, rng) {
        None => TreeNode::Leaf { value: mean },
        Some((feature, threshold)) => {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
                idx.into_iter().partition(|&i| rows[i][feature] <= threshold);
            TreeNode::Split {
                feature,
                threshold,
                left: Box::new(grow(rows, y, left_idx, params, width, rng)),
                right: Box::new(grow(rows, y, right_idx, params, width, rng)),
            }
        }
    }
}

/// Sum of squared errors of `y` over a prefix-sum slice.
fn sse(sum: f64, sum_sq: f64, n: usize) -> f64 {
    (sum_sq - sum * sum / n as f64).max(0.0)
}

fn best_split(
    rows: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    params: &CartParams,
    width: usize,
    rng: &mut Stream,
) -> Option<(usize, f64)> {
    let n = idx.len();
    let msl = params.min_samples_leaf;
    let max_features = params.max_features.resolve(width);

    let mut features: Vec<usize> = (0..width).collect();
    rng.shuffle(&mut features);

    let total: f64 = idx.iter().map(|&i| y[i]).sum();
    let total_sq: f64 = idx.iter().map(|&i| y[i] * y[i]).sum();
    let node_sse = sse(total, total_sq, n);

    let mut best: Option<(f64, usize, f64)> = None;
    let mut examined = 0usize;
    for &f in &features {
        if examined >= max_features && best.is_some() {
            break;
        }
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| rows[a][f].partial_cmp(&rows[b][f]).unwrap());
        if rows[order[0]][f] == rows[order[n - 1]][f] {
            continue;
        }
        examined += 1;

        let mut prefix = Vec::with_capacity(n + 1);
        let mut prefix_sq = Vec::with_capacity(n + 1);
        let (mut s, mut sq) = (0.0, 0.0);
        prefix.push(0.0);
        prefix_sq.push(0.0);
        for &i in &order {
            s += y[i];
            sq += y[i] * y[i];
            prefix.push(s);
            prefix_sq.push(sq);
        }

        let consider = |cut: usize, threshold: f64, best: &mut Option<(f64, usize, f64)>| {
            if cut < msl || n - cut < msl {
                return;
            }
            let left = sse(prefix[cut], prefix_sq[cut], cut);
            let right = sse(total - prefix[cut], total_sq - prefix_sq[cut], n - cut);
            let reduction = node_sse - left - right;
            if best.as_ref().is_none_or(|(r, _, _)| reduction > *r) {
                *best = Some((reduction, f, threshold));
            }
        };

        match params.splitter {
            Splitter::Best => {
                for cut in 1..n {
                    let lo = rows[order[cut - 1]][f];
                    let hi = rows[order[cut]][f];
                    if lo < hi {
                        consider(cut, (lo + hi) / 2.0, &mut best);
                    }
                }
            }
            Splitter::Random => {
                let lo = rows[order[0]][f];
                let hi = rows[order[n - 1]][f];
                let threshold = rng.uniform(lo, hi);
                let cut = order.iter().take_while(|&&i| rows[i][f] <= threshold).count();
                consider(cut, threshold, &mut best);
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}
