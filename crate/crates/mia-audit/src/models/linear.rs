//! Multinomial logistic regression trained by full-batch gradient descent.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{
    cross_entropy, descend, distinct_classes, feature_matrix, labels_of, one_hot, softmax_rows,
    MinMaxScaler, TrainConfig,
};
use crate::error::{AuditError, Result};
use crate::population::LabeledExample;

/// A linear softmax classifier over raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    num_classes: usize,
    feature_dim: usize,
    /// Row-major (p × d).
    weights: Vec<f64>,
    bias: Vec<f64>,
    pub config: TrainConfig,
}

impl LinearModel {
    pub fn new(
        num_classes: usize,
        feature_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        config: TrainConfig,
    ) -> Result<Self> {
        if weights.len() != num_classes * feature_dim || bias.len() != num_classes {
            return Err(AuditError::validation(
                "weight tensor shapes are inconsistent",
            ));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(AuditError::validation("model parameters must be finite"));
        }
        Ok(LinearModel {
            num_classes,
            feature_dim,
            weights,
            bias,
            config,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn weights(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.num_classes, self.feature_dim), &self.weights)
            .expect("validated at construction")
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.weights.iter().fold(0.0, |m, w| m.max(w.abs()))
    }

    /// Row-wise softmax confidences for a batch of raw feature rows.
    pub fn confidences(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.feature_dim {
            return Err(AuditError::validation(format!(
                "feature dimension {} does not match model dimension {}",
                x.ncols(),
                self.feature_dim
            )));
        }
        let mut logits = x.dot(&self.weights().t());
        for mut row in logits.rows_mut() {
            for (c, v) in row.iter_mut().enumerate() {
                *v += self.bias[c];
            }
        }
        softmax_rows(&mut logits);
        Ok(logits)
    }
}

/// L2-regularized cross-entropy and its gradient for a flattened
/// `[weights | bias]` parameter vector.
pub(crate) fn logreg_loss_grad(
    theta: &[f64],
    grad: &mut [f64],
    x: &Array2<f64>,
    labels: &[usize],
    num_classes: usize,
    l2: f64,
) -> f64 {
    let (n, d) = (x.nrows(), x.ncols());
    let w = ArrayView2::from_shape((num_classes, d), &theta[..num_classes * d]).unwrap();
    let bias = &theta[num_classes * d..];
    let mut logits = x.dot(&w.t());
    for mut row in logits.rows_mut() {
        for (c, v) in row.iter_mut().enumerate() {
            *v += bias[c];
        }
    }
    let data_loss = cross_entropy(&logits, labels);
    let mut probs = logits;
    softmax_rows(&mut probs);
    let delta = probs - one_hot(labels, num_classes); // (n × p)
    let gw = delta.t().dot(x); // (p × d)
    let inv_n = 1.0 / n as f64;
    let mut penalty = 0.0;
    for c in 0..num_classes {
        for j in 0..d {
            let wv = theta[c * d + j];
            grad[c * d + j] = gw[(c, j)] * inv_n + l2 * wv;
            penalty += wv * wv;
        }
    }
    for c in 0..num_classes {
        grad[num_classes * d + c] = delta.column(c).sum() * inv_n;
    }
    data_loss + 0.5 * l2 * penalty
}

/// Trains L2-regularized multinomial logistic regression with deterministic
/// full-batch gradient descent; features are min-max scaled internally and
/// the scaling is folded back into the returned weights.
pub fn train_logreg(data: &[LabeledExample], cfg: &TrainConfig) -> Result<LinearModel> {
    let labels = labels_of(data);
    if distinct_classes(&labels) < 2 {
        return Err(AuditError::validation(
            "training data is degenerate: fewer than 2 distinct classes",
        ));
    }
    let num_classes = labels.iter().max().unwrap() + 1;
    let raw = feature_matrix(data);
    let scaler = MinMaxScaler::fit(raw.view());
    let x = scaler.transform(raw.view());
    let d = x.ncols();

    let mut theta = vec![0.0; num_classes * d + num_classes];
    descend(&mut theta, cfg, |t, g| {
        logreg_loss_grad(t, g, &x, &labels, num_classes, cfg.l2)
    });

    let (mut weights, mut bias) = (
        theta[..num_classes * d].to_vec(),
        theta[num_classes * d..].to_vec(),
    );
    scaler.fold_into_linear(&mut weights, &mut bias, d);
    LinearModel::new(num_classes, d, weights, bias, cfg.clone())
}
