//! Toy target classifiers for tabular audits.
//!
//! Everything here trains with deterministic full-batch gradient descent
//! (plus classical momentum), so a (data, config) pair always reproduces
//! the same model bit for bit. Feature scaling happens inside the trainers
//! and is folded back into the returned weights, so trained models always
//! consume raw feature vectors.

mod dp;
mod eo;
pub mod gradcheck;
mod linear;
mod mlp;
mod scale;

pub use dp::train_dp_logreg;
pub use eo::{eo_postprocess, EoModel, EoPolicy, GroupMix};
pub use linear::{train_logreg, LinearModel};
pub use mlp::{train_mlp, MlpModel};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::population::LabeledExample;

/// Hyper-parameters for the trainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// L2 penalty strength λ on the weights (biases unregularized).
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Classical momentum coefficient; 0 gives plain gradient descent.
    pub momentum: f64,
    pub seed: u64,
    /// Hidden units (MLP only).
    pub hidden: usize,
    /// Privacy budget for the DP trainer; `None` elsewhere.
    pub dp_epsilon: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2: 0.0,
            epochs: 200,
            learning_rate: 0.3,
            momentum: 0.9,
            seed: 0,
            hidden: 0,
            dp_epsilon: None,
        }
    }
}

/// Any trained target classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrainedModel {
    Linear(LinearModel),
    Mlp(MlpModel),
    EoLinear(EoModel),
}

impl TrainedModel {
    pub fn num_classes(&self) -> usize {
        match self {
            TrainedModel::Linear(m) => m.num_classes(),
            TrainedModel::Mlp(m) => m.num_classes(),
            TrainedModel::EoLinear(m) => m.num_classes(),
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            TrainedModel::Linear(m) => m.feature_dim(),
            TrainedModel::Mlp(m) => m.feature_dim(),
            TrainedModel::EoLinear(m) => m.feature_dim(),
        }
    }

    /// Batch confidences; `subgroups` is consulted only by subgroup-aware
    /// models (equalized-odds policies).
    pub fn confidences(&self, x: ArrayView2<f64>, subgroups: &[usize]) -> Result<Array2<f64>> {
        match self {
            TrainedModel::Linear(m) => m.confidences(x),
            TrainedModel::Mlp(m) => m.confidences(x),
            TrainedModel::EoLinear(m) => m.confidences(x, subgroups),
        }
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(file)?)
    }
}

/// Confidence vector over the classes for a single feature vector.
pub fn predict_confidence(
    model: &TrainedModel,
    features: &[f64],
    subgroup: usize,
) -> Result<Vec<f64>> {
    if features.len() != model.feature_dim() {
        return Err(AuditError::validation(format!(
            "feature length {} does not match model dimension {}",
            features.len(),
            model.feature_dim()
        )));
    }
    let x = ArrayView2::from_shape((1, features.len()), features).expect("shape checked above");
    let conf = model.confidences(x, &[subgroup])?;
    Ok(conf.row(0).to_vec())
}

/// Fraction of rows whose argmax confidence equals the label.
pub fn accuracy(model: &TrainedModel, examples: &[LabeledExample]) -> Result<f64> {
    if examples.is_empty() {
        return Err(AuditError::unusable("cannot score an empty sample"));
    }
    let x = feature_matrix(examples);
    let z: Vec<usize> = examples.iter().map(|e| e.z).collect();
    let conf = model.confidences(x.view(), &z)?;
    let mut hits = 0usize;
    for (row, ex) in conf.outer_iter().zip(examples) {
        let pred = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap();
        if pred == ex.y {
            hits += 1;
        }
    }
    Ok(hits as f64 / examples.len() as f64)
}

/// Stacks example features into an (n × d) matrix.
pub fn feature_matrix(examples: &[LabeledExample]) -> Array2<f64> {
    let n = examples.len();
    let d = examples.first().map(|e| e.features.len()).unwrap_or(0);
    let mut x = Array2::zeros((n, d));
    for (i, ex) in examples.iter().enumerate() {
        for (j, &v) in ex.features.iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    x
}

pub(crate) fn labels_of(examples: &[LabeledExample]) -> Vec<usize> {
    examples.iter().map(|e| e.y).collect()
}

pub(crate) fn distinct_classes(labels: &[usize]) -> usize {
    let mut seen = std::collections::BTreeSet::new();
    for &y in labels {
        seen.insert(y);
    }
    seen.len()
}

/// Row-wise softmax with max subtraction.
pub(crate) fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// One-hot matrix of the labels.
pub(crate) fn one_hot(labels: &[usize], num_classes: usize) -> Array2<f64> {
    let mut y = Array2::zeros((labels.len(), num_classes));
    for (i, &l) in labels.iter().enumerate() {
        y[(i, l)] = 1.0;
    }
    y
}

/// Mean negative log-likelihood of `labels` under row-softmax of `logits`,
/// plus an L2 penalty term supplied by the caller.
pub(crate) fn cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    let mut loss = 0.0;
    for (row, &label) in logits.rows().into_iter().zip(labels) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum: f64 = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        loss += log_sum - row[label];
    }
    loss / n
}

pub(crate) use scale::MinMaxScaler;

/// Gradient-descent driver shared by the trainers.
#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::LabeledExample;

    fn tiny_data() -> Vec<LabeledExample> {
        (0..12)
            .map(|i| LabeledExample {
                id: format!("t{i}"),
                features: vec![i as f64, (i % 3) as f64],
                y: i % 2,
                z: 0,
            })
            .collect()
    }

    #[test]
    fn save_load_round_trip_preserves_models() {
        let dir = tempfile::tempdir().unwrap();
        let data = tiny_data();
        let cfg = TrainConfig {
            epochs: 30,
            hidden: 4,
            ..TrainConfig::default()
        };
        let models = [
            TrainedModel::Linear(train_logreg(&data, &cfg).unwrap()),
            TrainedModel::Mlp(train_mlp(&data, &cfg).unwrap()),
        ];
        for (i, model) in models.iter().enumerate() {
            let path = dir.path().join(format!("model{i}.json"));
            model.save_json(&path).unwrap();
            let back = TrainedModel::load_json(&path).unwrap();
            assert_eq!(*model, back);
            let x = feature_matrix(&data);
            assert_eq!(
                model.confidences(x.view(), &[0; 12]).unwrap(),
                back.confidences(x.view(), &[0; 12]).unwrap()
            );
        }
    }

    #[test]
    fn predict_confidence_checks_dimensions_and_normalizes() {
        let data = tiny_data();
        let model = TrainedModel::Linear(
            train_logreg(
                &data,
                &TrainConfig {
                    epochs: 50,
                    ..TrainConfig::default()
                },
            )
            .unwrap(),
        );
        assert!(predict_confidence(&model, &[1.0], 0).is_err());
        let conf = predict_confidence(&model, &[1.0, 2.0], 0).unwrap();
        assert!((conf.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

pub(crate) fn descend<F>(theta: &mut [f64], cfg: &TrainConfig, mut loss_grad: F)
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let mut grad = vec![0.0; theta.len()];
    let mut velocity = vec![0.0; theta.len()];
    for _ in 0..cfg.epochs {
        loss_grad(theta, &mut grad);
        for ((t, v), g) in theta.iter_mut().zip(&mut velocity).zip(&grad) {
            *v = cfg.momentum * *v - cfg.learning_rate * g;
            *t += *v;
        }
    }
}
