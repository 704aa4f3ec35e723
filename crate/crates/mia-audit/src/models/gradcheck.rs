//! Finite-difference verification of the training gradients.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::linear::logreg_loss_grad;
use super::mlp::{mlp_loss_grad, MlpDims};
use ndarray::Array2;

fn random_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    d: usize,
    p: usize,
) -> (Array2<f64>, Vec<usize>) {
    let x = Array2::from_shape_fn((n, d), |_| rng.gen_range(-2.0..2.0));
    let labels = (0..n).map(|_| rng.gen_range(0..p)).collect();
    (x, labels)
}

fn relative_error<F>(theta: &[f64], analytic: &[f64], mut loss: F) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let h = 1e-6;
    let mut point = theta.to_vec();
    let mut numeric = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        point[i] = theta[i] + h;
        let up = loss(&point);
        point[i] = theta[i] - h;
        let down = loss(&point);
        point[i] = theta[i];
        numeric[i] = (up - down) / (2.0 * h);
    }
    let diff: f64 = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / scale.max(1e-8)
}

/// Relative error between the analytic logistic-regression gradient and
/// central finite differences on one random small instance.
pub fn logreg_gradient_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, d, p) = (12, 4, 3);
    let (x, labels) = random_instance(&mut rng, n, d, p);
    let l2 = 0.1;
    let theta: Vec<f64> = (0..p * d + p).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut grad = vec![0.0; theta.len()];
    logreg_loss_grad(&theta, &mut grad, &x, &labels, p, l2);
    relative_error(&theta, &grad, |t| {
        let mut scratch = vec![0.0; t.len()];
        logreg_loss_grad(t, &mut scratch, &x, &labels, p, l2)
    })
}

/// Relative error between the analytic MLP gradient and central finite
/// differences on one random small instance.
///
/// The rectifier is non-differentiable at 0; random inputs keep the
/// pre-activations away from that set.
pub fn mlp_gradient_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x517c_c1b7));
    let (n, d, h, p) = (10, 3, 5, 2);
    let (x, labels) = random_instance(&mut rng, n, d, p);
    let dims = MlpDims { d, h, p };
    let l2 = 0.05;
    let theta: Vec<f64> = (0..dims.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut grad = vec![0.0; theta.len()];
    mlp_loss_grad(&theta, &mut grad, &x, &labels, &dims, l2);
    relative_error(&theta, &grad, |t| {
        let mut scratch = vec![0.0; t.len()];
        mlp_loss_grad(t, &mut scratch, &x, &labels, &dims, l2)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..10 {
            let lr = logreg_gradient_error(seed);
            assert!(lr < 1e-5, "logreg gradient error {lr} at seed {seed}");
            let mlp = mlp_gradient_error(seed);
            assert!(mlp < 1e-5, "mlp gradient error {mlp} at seed {seed}");
        }
    }
}
