//! Single-hidden-layer network with rectifier activation.
//!
//! The over-parametrized configurations (hundreds of hidden units, no
//! regularization, long training) are used deliberately to produce
//! overfitting targets for the audits.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    cross_entropy, descend, distinct_classes, feature_matrix, labels_of, one_hot, softmax_rows,
    MinMaxScaler, TrainConfig,
};
use crate::error::{AuditError, Result};
use crate::population::LabeledExample;

/// One-hidden-layer ReLU network over raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    num_classes: usize,
    feature_dim: usize,
    hidden: usize,
    /// Row-major (h × d).
    hidden_weights: Vec<f64>,
    hidden_bias: Vec<f64>,
    /// Row-major (p × h).
    output_weights: Vec<f64>,
    output_bias: Vec<f64>,
    pub config: TrainConfig,
}

impl MlpModel {
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn confidences(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.feature_dim {
            return Err(AuditError::validation(format!(
                "feature dimension {} does not match model dimension {}",
                x.ncols(),
                self.feature_dim
            )));
        }
        let w1 = ArrayView2::from_shape((self.hidden, self.feature_dim), &self.hidden_weights)
            .expect("validated shape");
        let w2 = ArrayView2::from_shape((self.num_classes, self.hidden), &self.output_weights)
            .expect("validated shape");
        let mut h = x.dot(&w1.t());
        for mut row in h.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v + self.hidden_bias[j]).max(0.0);
            }
        }
        let mut logits = h.dot(&w2.t());
        for mut row in logits.rows_mut() {
            for (c, v) in row.iter_mut().enumerate() {
                *v += self.output_bias[c];
            }
        }
        softmax_rows(&mut logits);
        Ok(logits)
    }
}

/// Parameter layout inside the flattened vector: [w1 | b1 | w2 | b2].
pub(crate) struct MlpDims {
    pub d: usize,
    pub h: usize,
    pub p: usize,
}

impl MlpDims {
    pub fn len(&self) -> usize {
        self.h * self.d + self.h + self.p * self.h + self.p
    }

    fn split<'a>(&self, theta: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64], &'a [f64]) {
        let (w1, rest) = theta.split_at(self.h * self.d);
        let (b1, rest) = rest.split_at(self.h);
        let (w2, b2) = rest.split_at(self.p * self.h);
        (w1, b1, w2, b2)
    }
}

pub(crate) fn mlp_loss_grad(
    theta: &[f64],
    grad: &mut [f64],
    x: &Array2<f64>,
    labels: &[usize],
    dims: &MlpDims,
    l2: f64,
) -> f64 {
    let (n, d, h, p) = (x.nrows(), dims.d, dims.h, dims.p);
    let (w1s, b1, w2s, b2) = dims.split(theta);
    let w1 = ArrayView2::from_shape((h, d), w1s).unwrap();
    let w2 = ArrayView2::from_shape((p, h), w2s).unwrap();

    let mut hidden = x.dot(&w1.t());
    for mut row in hidden.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v + b1[j]).max(0.0);
        }
    }
    let mut logits = hidden.dot(&w2.t());
    for mut row in logits.rows_mut() {
        for (c, v) in row.iter_mut().enumerate() {
            *v += b2[c];
        }
    }
    let data_loss = cross_entropy(&logits, labels);
    let mut probs = logits;
    softmax_rows(&mut probs);
    let inv_n = 1.0 / n as f64;
    let delta = (probs - one_hot(labels, p)) * inv_n; // (n × p)

    let g_w2 = delta.t().dot(&hidden); // (p × h)
    let mut d_hidden = delta.dot(&w2); // (n × h)
    for (mut row, hrow) in d_hidden.rows_mut().into_iter().zip(hidden.rows()) {
        for (v, &a) in row.iter_mut().zip(hrow.iter()) {
            if a <= 0.0 {
                *v = 0.0;
            }
        }
    }
    let g_w1 = d_hidden.t().dot(x); // (h × d)

    let mut penalty = 0.0;
    let (gw1, rest) = grad.split_at_mut(h * d);
    let (gb1, rest) = rest.split_at_mut(h);
    let (gw2, gb2) = rest.split_at_mut(p * h);
    for j in 0..h {
        for c in 0..d {
            let w = w1s[j * d + c];
            gw1[j * d + c] = g_w1[(j, c)] + l2 * w;
            penalty += w * w;
        }
        gb1[j] = d_hidden.column(j).sum();
    }
    for c in 0..p {
        for j in 0..h {
            let w = w2s[c * h + j];
            gw2[c * h + j] = g_w2[(c, j)] + l2 * w;
            penalty += w * w;
        }
        gb2[c] = delta.column(c).sum();
    }
    data_loss + 0.5 * l2 * penalty
}

pub(crate) fn glorot_init(theta: &mut [f64], dims: &MlpDims, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, d, p) = (dims.h, dims.d, dims.p);
    let a1 = (6.0 / (d + h) as f64).sqrt();
    for v in &mut theta[..h * d] {
        *v = rng.gen_range(-a1..a1);
    }
    let a2 = (6.0 / (h + p) as f64).sqrt();
    let start = h * d + h;
    for v in &mut theta[start..start + p * h] {
        *v = rng.gen_range(-a2..a2);
    }
}

/// Trains the network with deterministic full-batch gradient descent from a
/// seeded random initialization.
pub fn train_mlp(data: &[LabeledExample], cfg: &TrainConfig) -> Result<MlpModel> {
    if cfg.hidden == 0 {
        return Err(AuditError::validation(
            "MLP requires a positive hidden width",
        ));
    }
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
    let dims = MlpDims {
        d: x.ncols(),
        h: cfg.hidden,
        p: num_classes,
    };

    let mut theta = vec![0.0; dims.len()];
    glorot_init(&mut theta, &dims, cfg.seed);
    descend(&mut theta, cfg, |t, g| {
        mlp_loss_grad(t, g, &x, &labels, &dims, cfg.l2)
    });

    let (w1, b1, w2, b2) = dims.split(&theta);
    let (mut hidden_weights, hidden_bias) = (w1.to_vec(), b1.to_vec());
    let mut hidden_bias = hidden_bias;
    scaler.fold_into_linear(&mut hidden_weights, &mut hidden_bias, dims.d);
    Ok(MlpModel {
        num_classes,
        feature_dim: dims.d,
        hidden: cfg.hidden,
        hidden_weights,
        hidden_bias,
        output_weights: w2.to_vec(),
        output_bias: b2.to_vec(),
        config: cfg.clone(),
    })
}
