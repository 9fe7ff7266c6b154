//! Least-squares gradient-boosted regression trees with exact greedy splits.
//!
//! Each boosting round fits a depth-limited tree to the current residuals.
//! Candidate thresholds are midpoints between consecutive distinct feature
//! values; the split with the largest squared-error reduction wins, ties
//! going to the lowest feature index and then the lowest threshold. Every
//! node records its training population (`cover`), which the Shapley
//! explainer uses as the background distribution.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbmParams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for GbmParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            learning_rate: 0.05,
            max_depth: 3,
            min_samples_leaf: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature_index: usize,
        threshold: f64,
        split_gain: f64,
        #[serde(default)]
        cover: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
        #[serde(default)]
        cover: usize,
    },
}

impl TreeNode {
    /// Leaf value reached by `x` (left iff `x[f] <= threshold`).
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature_index,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature_index] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn cover(&self) -> usize {
        match self {
            TreeNode::Split { cover, .. } | TreeNode::Leaf { cover, .. } => *cover,
        }
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Visits every node depth-first, left before right.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a TreeNode)) {
        f(self);
        if let TreeNode::Split { left, right, .. } = self {
            left.visit(f);
            right.visit(f);
        }
    }

    /// Cover-weighted mean leaf value.
    pub fn expected_value(&self) -> f64 {
        match self {
            TreeNode::Leaf { value, .. } => *value,
            TreeNode::Split {
                cover, left, right, ..
            } => {
                let c = *cover as f64;
                (left.cover() as f64 * left.expected_value()
                    + right.cover() as f64 * right.expected_value())
                    / c
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub version: u64,
    pub base_score: f64,
    pub learning_rate: f64,
    pub feature_names: Vec<String>,
    pub params: GbmParams,
    pub trees: Vec<TreeNode>,
}

/// A trained model with the training RMSE before the first tree and after each one.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub model: GbmModel,
    pub rmse_trace: Vec<f64>,
}

/// Mean computed as an offset from the first element, so constant input
/// returns that constant exactly.
fn stable_mean(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut it = values.clone();
    let Some(first) = it.next() else { return 0.0 };
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + (v - first), n + 1));
    first + sum / n as f64
}

fn rmse_of(residuals: &[f64]) -> f64 {
    (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt()
}

struct Builder<'a> {
    columns: Vec<Vec<f64>>,
    /// Row indices sorted by each feature's value.
    order: Vec<Vec<usize>>,
    params: &'a GbmParams,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Builder<'_> {
    fn build(&self, rows: &[usize], member: &mut [bool], residuals: &[f64], depth: usize) -> TreeNode {
        let cover = rows.len();
        let best = if depth < self.params.max_depth {
            self.best_split(rows, member, residuals)
        } else {
            None
        };
        let Some(split) = best else {
            return TreeNode::Leaf {
                value: stable_mean(rows.iter().map(|&r| residuals[r])),
                cover,
            };
        };

        let col = &self.columns[split.feature];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| col[r] <= split.threshold);

        for &r in &right_rows {
            member[r] = false;
        }
        let left = self.build(&left_rows, member, residuals, depth + 1);
        for &r in &right_rows {
            member[r] = true;
        }
        for &r in &left_rows {
            member[r] = false;
        }
        let right = self.build(&right_rows, member, residuals, depth + 1);
        for &r in &left_rows {
            member[r] = true;
        }

        TreeNode::Split {
            feature_index: split.feature,
            threshold: split.threshold,
            split_gain: split.gain,
            cover,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn best_split(&self, rows: &[usize], member: &[bool], residuals: &[f64]) -> Option<Candidate> {
        let n = rows.len();
        let min_leaf = self.params.min_samples_leaf;
        if n < 2 * min_leaf {
            return None;
        }
        let total: f64 = rows.iter().map(|&r| residuals[r]).sum();
        let parent_score = total * total / n as f64;

        let mut best: Option<Candidate> = None;
        for (feature, order) in self.order.iter().enumerate() {
            let col = &self.columns[feature];
            let mut sum_left = 0.0;
            let mut n_left = 0usize;
            let mut members = order.iter().copied().filter(|&r| member[r]).peekable();
            while let Some(r) = members.next() {
                sum_left += residuals[r];
                n_left += 1;
                let Some(&next) = members.peek() else { break };
                let (v, v_next) = (col[r], col[next]);
                if v == v_next || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let sum_right = total - sum_left;
                let gain = sum_left * sum_left / n_left as f64
                    + sum_right * sum_right / (n - n_left) as f64
                    - parent_score;
                if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mid = v + (v_next - v) / 2.0;
                    let threshold = if mid < v_next { mid } else { v };
                    best = Some(Candidate {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }
}

/// Fits the ensemble. `x` is row-major with one row per subject.
pub fn train(
    x: &[Vec<f64>],
    y: &[f64],
    feature_names: Vec<String>,
    params: &GbmParams,
) -> Result<TrainOutput> {
    let invalid = |msg: String| Error::InvalidTrainingData(msg);
    let n = x.len();
    if n == 0 {
        return Err(invalid("empty feature matrix".into()));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    let width = feature_names.len();
    if let Some((i, row)) = x.iter().enumerate().find(|(_, r)| r.len() != width) {
        return Err(Error::WidthMismatch(format!(
            "row {i} has {} values, expected {width}",
            row.len()
        )));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(invalid("non-finite value in training data".into()));
    }
    if params.min_samples_leaf == 0 || n < 2 * params.min_samples_leaf {
        return Err(invalid(format!(
            "{n} samples cannot fill two leaves of min size {}",
            params.min_samples_leaf
        )));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(invalid(format!(
            "learning rate {} outside (0, 1]",
            params.learning_rate
        )));
    }

    let columns: Vec<Vec<f64>> = (0..width).map(|f| x.iter().map(|r| r[f]).collect()).collect();
    let order = columns
        .iter()
        .map(|col| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            idx
        })
        .collect();
    let builder = Builder {
        columns,
        order,
        params,
    };

    let base_score = stable_mean(y.iter().copied());
    let mut pred = vec![base_score; n];
    let mut residuals: Vec<f64> = y.iter().zip(&pred).map(|(t, p)| t - p).collect();
    let mut trace = vec![rmse_of(&residuals)];
    let all_rows: Vec<usize> = (0..n).collect();
    let mut member = vec![true; n];
    let mut trees = Vec::with_capacity(params.n_trees);

    for _ in 0..params.n_trees {
        let tree = builder.build(&all_rows, &mut member, &residuals, 0);
        for (i, row) in x.iter().enumerate() {
            pred[i] += params.learning_rate * tree.predict(row);
            residuals[i] = y[i] - pred[i];
        }
        trace.push(rmse_of(&residuals));
        trees.push(tree);
    }

    Ok(TrainOutput {
        model: GbmModel {
            version: MODEL_FORMAT_VERSION,
            base_score,
            learning_rate: params.learning_rate,
            feature_names,
            params: *params,
            trees,
        },
        rmse_trace: trace,
    })
}

impl GbmModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Prediction for one row; the width is not checked.
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.trees
            .iter()
            .fold(self.base_score, |acc, t| acc + self.learning_rate * t.predict(x))
    }

    pub fn check_width(&self, width: usize) -> Result<()> {
        let expected = self.n_features();
        match width.cmp(&expected) {
            std::cmp::Ordering::Equal => Ok(()),
            std::cmp::Ordering::Less => Err(Error::WidthMismatch(format!(
                "input has {width} features, missing {}",
                self.feature_names[width..].join(", ")
            ))),
            std::cmp::Ordering::Greater => Err(Error::WidthMismatch(format!(
                "input has {width} features, {} extra beyond {expected}",
                width - expected
            ))),
        }
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        x.iter()
            .map(|row| {
                self.check_width(row.len())?;
                Ok(self.predict_row(row))
            })
            .collect()
    }

    /// Predicts rows given by name; names must match the model's features exactly.
    pub fn check_names(&self, names: &[String]) -> Result<()> {
        if names == self.feature_names.as_slice() {
            return Ok(());
        }
        let missing: Vec<&str> = self
            .feature_names
            .iter()
            .filter(|f| !names.contains(f))
            .map(String::as_str)
            .collect();
        let extra: Vec<&str> = names
            .iter()
            .filter(|f| !self.feature_names.contains(f))
            .map(String::as_str)
            .collect();
        Err(Error::WidthMismatch(format!(
            "feature names differ from the model; missing [{}], extra [{}]",
            missing.join(", "),
            extra.join(", ")
        )))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let json_err = |source| Error::Json {
            path: origin.to_path_buf(),
            source,
        };
        #[derive(Deserialize)]
        struct Probe {
            version: u64,
        }
        let probe: Probe = serde_json::from_str(text).map_err(json_err)?;
        if probe.version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion {
                found: probe.version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        serde_json::from_str(text).map_err(json_err)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_json(&text, path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub mae: f64,
    pub rmse: f64,
    /// Absent when the reference values have zero variance.
    pub r2: Option<f64>,
    pub n: usize,
}

pub fn evaluate(predicted: &[f64], reference: &[f64]) -> Result<RegressionMetrics> {
    if predicted.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: reference.len(),
        });
    }
    let n = predicted.len();
    if n < 2 {
        return Err(Error::TooFewPairs(n));
    }
    let nf = n as f64;
    let abs_sum: f64 = predicted.iter().zip(reference).map(|(p, y)| (p - y).abs()).sum();
    let sq_sum: f64 = predicted.iter().zip(reference).map(|(p, y)| (p - y).powi(2)).sum();
    let mean_y = reference.iter().sum::<f64>() / nf;
    let ss_tot: f64 = reference.iter().map(|y| (y - mean_y).powi(2)).sum();
    Ok(RegressionMetrics {
        mae: abs_sum / nf,
        rmse: (sq_sum / nf).sqrt(),
        r2: (ss_tot > 0.0).then(|| 1.0 - sq_sum / ss_tot),
        n,
    })
}

/// Total split gain per feature, in model feature order.
pub fn gain_importance(model: &GbmModel) -> Vec<(String, f64)> {
    let mut gains = vec![0.0; model.n_features()];
    for tree in &model.trees {
        tree.visit(&mut |node| {
            if let TreeNode::Split {
                feature_index,
                split_gain,
                ..
            } = node
            {
                gains[*feature_index] += split_gain;
            }
        });
    }
    model.feature_names.iter().cloned().zip(gains).collect()
}
