//! Differentially private logistic regression via output perturbation.
//!
//! Features are min-max scaled to [0, 1] and rows capped at norm √d, a
//! non-private logistic regression is trained on the scaled data, and
//! isotropic noise with norm distributed Gamma(D, 2 / (n λ ε)) is added to
//! the flattened parameters. The per-coordinate scale 2 / (n λ ε) is the
//! output-perturbation sensitivity of the regularized minimizer.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::linear::{logreg_loss_grad, LinearModel};
use super::{descend, distinct_classes, feature_matrix, labels_of, MinMaxScaler, TrainConfig};
use crate::error::{AuditError, Result};
use crate::population::LabeledExample;

fn cap_row_norms(x: &mut Array2<f64>, cap: f64) {
    for mut row in x.rows_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > cap {
            let scale = cap / norm;
            row.iter_mut().for_each(|v| *v *= scale);
        }
    }
}

/// Trains an ε-DP logistic regression. Requires `cfg.dp_epsilon > 0` and
/// `cfg.l2 > 0` (the sensitivity is unbounded without regularization).
pub fn train_dp_logreg(data: &[LabeledExample], cfg: &TrainConfig) -> Result<LinearModel> {
    let epsilon = cfg
        .dp_epsilon
        .ok_or_else(|| AuditError::validation("DP training requires dp_epsilon"))?;
    if epsilon <= 0.0 {
        return Err(AuditError::validation(format!(
            "dp_epsilon must be positive, got {epsilon}"
        )));
    }
    if cfg.l2 <= 0.0 {
        return Err(AuditError::validation(
            "DP training requires l2 > 0: sensitivity is unbounded without regularization",
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
    let mut x = scaler.transform(raw.view());
    let d = x.ncols();
    cap_row_norms(&mut x, (d as f64).sqrt());

    let mut theta = vec![0.0; num_classes * d + num_classes];
    descend(&mut theta, cfg, |t, g| {
        logreg_loss_grad(t, g, &x, &labels, num_classes, cfg.l2)
    });

    let n = data.len() as f64;
    let noise_scale = 2.0 / (n * cfg.l2 * epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6470_7065_7274_7572);
    let dim = theta.len();
    let mut direction: Vec<f64> = (0..dim)
        .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect();
    let norm = direction
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(1e-300);
    direction.iter_mut().for_each(|v| *v /= norm);
    let magnitude = Gamma::new(dim as f64, noise_scale)
        .expect("positive gamma parameters")
        .sample(&mut rng);
    for (t, dir) in theta.iter_mut().zip(&direction) {
        *t += magnitude * dir;
    }

    let (mut weights, mut bias) = (
        theta[..num_classes * d].to_vec(),
        theta[num_classes * d..].to_vec(),
    );
    scaler.fold_into_linear(&mut weights, &mut bias, d);
    LinearModel::new(num_classes, d, weights, bias, cfg.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::train_logreg;
    use rand::Rng;

    fn clusters(n_per: usize, seed: u64) -> Vec<LabeledExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::new();
        for y in 0..2usize {
            let c = if y == 0 { -1.0 } else { 1.0 };
            for i in 0..n_per {
                data.push(LabeledExample {
                    id: format!("d{y}-{i}"),
                    features: vec![c + rng.gen_range(-0.6..0.6), c + rng.gen_range(-0.6..0.6)],
                    y,
                    z: 0,
                });
            }
        }
        data
    }

    fn cfg(epsilon: f64, seed: u64) -> TrainConfig {
        TrainConfig {
            l2: 0.05,
            epochs: 200,
            learning_rate: 0.5,
            seed,
            dp_epsilon: Some(epsilon),
            ..TrainConfig::default()
        }
    }

    #[test]
    fn huge_epsilon_recovers_the_non_private_model() {
        let data = clusters(100, 1);
        let private = train_dp_logreg(&data, &cfg(1e6, 3)).unwrap();
        let mut plain_cfg = cfg(1e6, 3);
        plain_cfg.dp_epsilon = None;
        let plain = train_logreg(&data, &plain_cfg).unwrap();
        let max_diff = private
            .weights()
            .iter()
            .zip(plain.weights().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_diff < 1e-3, "weights differ by {max_diff}");
    }

    #[test]
    fn rejects_missing_or_invalid_privacy_parameters() {
        let data = clusters(20, 2);
        let mut c = cfg(1.0, 0);
        c.dp_epsilon = None;
        assert!(train_dp_logreg(&data, &c).is_err());
        let mut c = cfg(-1.0, 0);
        c.dp_epsilon = Some(-1.0);
        assert!(train_dp_logreg(&data, &c).is_err());
        let mut c = cfg(1.0, 0);
        c.l2 = 0.0;
        assert!(train_dp_logreg(&data, &c).is_err());
    }

    #[test]
    fn noise_scales_inversely_with_epsilon() {
        let data = clusters(60, 5);
        let noise_norm = |epsilon: f64, seed: u64| {
            let private = train_dp_logreg(&data, &cfg(epsilon, seed)).unwrap();
            let mut plain_cfg = cfg(epsilon, seed);
            plain_cfg.dp_epsilon = None;
            let plain = train_logreg(&data, &plain_cfg).unwrap();
            private
                .weights()
                .iter()
                .zip(plain.weights().iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        let mean = |epsilon: f64| (0..30).map(|s| noise_norm(epsilon, s)).sum::<f64>() / 30.0;
        let at_one = mean(1.0);
        let at_two = mean(2.0);
        let ratio = at_one / at_two;
        assert!(
            (1.5..2.7).contains(&ratio),
            "doubling epsilon should roughly halve the noise, ratio {ratio}"
        );
    }

    #[test]
    fn accuracy_improves_with_epsilon_over_seeds() {
        let data = clusters(150, 8);
        let mean_acc = |epsilon: f64| {
            let mut total = 0.0;
            for seed in 0..20 {
                let model = crate::models::TrainedModel::Linear(
                    train_dp_logreg(&data, &cfg(epsilon, seed)).unwrap(),
                );
                total += crate::models::accuracy(&model, &data).unwrap();
            }
            total / 20.0
        };
        assert!(mean_acc(1.0) <= mean_acc(7.5) + 1e-9);
    }

    #[test]
    fn seeded_noise_is_deterministic() {
        let data = clusters(30, 9);
        let a = train_dp_logreg(&data, &cfg(1.0, 77)).unwrap();
        let b = train_dp_logreg(&data, &cfg(1.0, 77)).unwrap();
        assert_eq!(a, b);
        let c = train_dp_logreg(&data, &cfg(1.0, 78)).unwrap();
        assert_ne!(a, c);
    }
}
