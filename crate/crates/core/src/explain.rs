//! Exact Shapley attributions for the boosted ensemble (path-dependent
//! TreeSHAP), plus global importance, waterfall and dependence data.
//!
//! The value function of a feature subset `S` is the expected tree output
//! when features in `S` follow `x` and every other split is averaged over
//! its children in proportion to their training covers. Attributions are
//! computed per tree in polynomial time and summed with the learning rate.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbm::{GbmModel, TreeNode};

/// Attribution of one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    pub base_value: f64,
    pub prediction: f64,
    pub feature_names: Vec<String>,
    pub phi: Vec<f64>,
}

impl ShapExplanation {
    /// `base_value + sum(phi) - prediction`; zero up to rounding.
    pub fn efficiency_gap(&self) -> f64 {
        self.base_value + self.phi.iter().sum::<f64>() - self.prediction
    }
}

#[derive(Debug, Clone, Copy)]
struct PathElement {
    feature: Option<usize>,
    zero_fraction: f64,
    one_fraction: f64,
    weight: f64,
}

fn extend_path(path: &mut Vec<PathElement>, zero_fraction: f64, one_fraction: f64, feature: Option<usize>) {
    let depth = path.len();
    path.push(PathElement {
        feature,
        zero_fraction,
        one_fraction,
        weight: if depth == 0 { 1.0 } else { 0.0 },
    });
    let l = depth as f64;
    for i in (0..depth).rev() {
        let w = path[i].weight;
        path[i + 1].weight += one_fraction * w * (i as f64 + 1.0) / (l + 1.0);
        path[i].weight = zero_fraction * w * (l - i as f64) / (l + 1.0);
    }
}

fn unwind_path(path: &mut Vec<PathElement>, index: usize) {
    let last = path.len() - 1;
    let l = last as f64;
    let PathElement {
        zero_fraction,
        one_fraction,
        ..
    } = path[index];
    let mut next = path[last].weight;
    for j in (0..last).rev() {
        let jf = j as f64;
        if one_fraction != 0.0 {
            let tmp = path[j].weight;
            path[j].weight = next * (l + 1.0) / ((jf + 1.0) * one_fraction);
            next = tmp - path[j].weight * zero_fraction * (l - jf) / (l + 1.0);
        } else {
            path[j].weight = path[j].weight * (l + 1.0) / (zero_fraction * (l - jf));
        }
    }
    for j in index..last {
        path[j].feature = path[j + 1].feature;
        path[j].zero_fraction = path[j + 1].zero_fraction;
        path[j].one_fraction = path[j + 1].one_fraction;
    }
    path.pop();
}

/// Total permutation weight of the path with element `index` removed.
fn unwound_sum(path: &[PathElement], index: usize) -> f64 {
    let last = path.len() - 1;
    let l = last as f64;
    let PathElement {
        zero_fraction,
        one_fraction,
        ..
    } = path[index];
    let mut next = path[last].weight;
    let mut total = 0.0;
    for j in (0..last).rev() {
        let jf = j as f64;
        if one_fraction != 0.0 {
            let tmp = next * (l + 1.0) / ((jf + 1.0) * one_fraction);
            total += tmp;
            next = path[j].weight - tmp * zero_fraction * (l - jf) / (l + 1.0);
        } else {
            total += path[j].weight / (zero_fraction * (l - jf) / (l + 1.0));
        }
    }
    total
}

fn recurse(
    node: &TreeNode,
    x: &[f64],
    phi: &mut [f64],
    mut path: Vec<PathElement>,
    zero_fraction: f64,
    one_fraction: f64,
    feature: Option<usize>,
) {
    extend_path(&mut path, zero_fraction, one_fraction, feature);
    match node {
        TreeNode::Leaf { value, .. } => {
            for i in 1..path.len() {
                let w = unwound_sum(&path, i);
                let el = path[i];
                let f = el.feature.expect("non-root path elements carry a feature");
                phi[f] += w * (el.one_fraction - el.zero_fraction) * value;
            }
        }
        TreeNode::Split {
            feature_index,
            threshold,
            cover,
            left,
            right,
            ..
        } => {
            let (hot, cold) = if x[*feature_index] <= *threshold {
                (left, right)
            } else {
                (right, left)
            };
            let mut incoming_zero = 1.0;
            let mut incoming_one = 1.0;
            if let Some(k) = (1..path.len()).find(|&k| path[k].feature == Some(*feature_index)) {
                incoming_zero = path[k].zero_fraction;
                incoming_one = path[k].one_fraction;
                unwind_path(&mut path, k);
            }
            let c = *cover as f64;
            recurse(
                hot,
                x,
                phi,
                path.clone(),
                incoming_zero * hot.cover() as f64 / c,
                incoming_one,
                Some(*feature_index),
            );
            recurse(
                cold,
                x,
                phi,
                path,
                incoming_zero * cold.cover() as f64 / c,
                0.0,
                Some(*feature_index),
            );
        }
    }
}

fn check_covers(tree: &TreeNode) -> Result<()> {
    let mut ok = true;
    tree.visit(&mut |n| ok &= n.cover() > 0);
    if ok {
        Ok(())
    } else {
        Err(Error::MissingCover)
    }
}

/// Shapley values of a single tree at `x`, written into `phi`.
pub fn tree_shap_single(tree: &TreeNode, x: &[f64], phi: &mut [f64]) {
    let max_depth = tree.depth() + 2;
    recurse(tree, x, phi, Vec::with_capacity(max_depth), 1.0, 1.0, None);
}

/// Exact attribution of `model`'s prediction at `x`.
pub fn tree_shap(model: &GbmModel, x: &[f64]) -> Result<ShapExplanation> {
    model.check_width(x.len())?;
    let mut phi = vec![0.0; x.len()];
    let mut base_value = model.base_score;
    let mut per_tree = vec![0.0; x.len()];
    for tree in &model.trees {
        check_covers(tree)?;
        per_tree.iter_mut().for_each(|p| *p = 0.0);
        tree_shap_single(tree, x, &mut per_tree);
        for (p, t) in phi.iter_mut().zip(&per_tree) {
            *p += model.learning_rate * t;
        }
        base_value += model.learning_rate * tree.expected_value();
    }
    Ok(ShapExplanation {
        base_value,
        prediction: model.predict_row(x),
        feature_names: model.feature_names.clone(),
        phi,
    })
}

/// Mean |phi| per feature, sorted by value descending then name ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    pub entries: Vec<(String, f64)>,
}

pub fn global_importance(model: &GbmModel, x: &[Vec<f64>]) -> Result<GlobalImportance> {
    if x.is_empty() {
        return Err(Error::InvalidTrainingData(
            "global importance needs at least one row".into(),
        ));
    }
    let mut sums = vec![0.0; model.n_features()];
    for row in x {
        let e = tree_shap(model, row)?;
        for (s, p) in sums.iter_mut().zip(&e.phi) {
            *s += p.abs();
        }
    }
    let mut entries: Vec<(String, f64)> = model
        .feature_names
        .iter()
        .cloned()
        .zip(sums.into_iter().map(|s| s / x.len() as f64))
        .collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(GlobalImportance { entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaterfallStep {
    pub name: String,
    pub contribution: f64,
    pub cumulative: f64,
}

/// Base value followed by every non-zero contribution, largest |phi| first
/// (ties by name), each with the running total.
pub fn waterfall_data(explanation: &ShapExplanation) -> Vec<WaterfallStep> {
    let mut order: Vec<usize> = (0..explanation.phi.len())
        .filter(|&i| explanation.phi[i] != 0.0)
        .collect();
    order.sort_by(|&a, &b| {
        explanation.phi[b]
            .abs()
            .total_cmp(&explanation.phi[a].abs())
            .then_with(|| explanation.feature_names[a].cmp(&explanation.feature_names[b]))
    });
    let mut steps = vec![WaterfallStep {
        name: "base_value".into(),
        contribution: explanation.base_value,
        cumulative: explanation.base_value,
    }];
    let mut running = explanation.base_value;
    for i in order {
        running += explanation.phi[i];
        steps.push(WaterfallStep {
            name: explanation.feature_names[i].clone(),
            contribution: explanation.phi[i],
            cumulative: running,
        });
    }
    steps
}

/// `(feature value, phi)` per row, sorted by value (stable in row order).
pub fn dependence_data(model: &GbmModel, x: &[Vec<f64>], feature: &str) -> Result<Vec<(f64, f64)>> {
    let idx = model
        .feature_names
        .iter()
        .position(|f| f == feature)
        .ok_or_else(|| Error::UnknownFeature(feature.to_string()))?;
    let mut pairs = x
        .iter()
        .map(|row| Ok((row[idx], tree_shap(model, row)?.phi[idx])))
        .collect::<Result<Vec<_>>>()?;
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    Ok(pairs)
}
