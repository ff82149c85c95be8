//! Independent oracles and data builders shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wflr::{LabeledCoefficients, LinearModelState, Matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Gaussian design with labels drawn from a logistic model; weak enough
/// signal that n = 200, d = 32 is not separable.
pub fn logistic_instance(n: usize, d: usize, j0: usize, seed: u64) -> LabeledCoefficients<f64> {
    let mut r = rng(seed);
    let theta = Matrix::from_vec(n, d, gaussian(&mut r, n * d)).unwrap();
    let truth: Vec<f64> = (0..d).map(|j| if j % 5 == 0 { 0.6 } else { 0.0 }).collect();
    let labels = (0..n)
        .map(|i| {
            let eta: f64 = 0.2
                + theta
                    .row(i)
                    .iter()
                    .zip(&truth)
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            u8::from(r.random::<f64>() < 1.0 / (1.0 + (-eta).exp()))
        })
        .collect();
    LabeledCoefficients::new(theta, labels, j0).unwrap()
}

pub fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// Direct Bernoulli negative log-likelihood.
pub fn nll_oracle(theta: &Matrix<f64>, labels: &[u8], omega: &[f64], b: f64) -> f64 {
    theta
        .rows_iter()
        .zip(labels)
        .map(|(row, &y)| {
            let eta = b + row.iter().zip(omega).map(|(a, w)| a * w).sum::<f64>();
            // log(1 + e^η) - yη, evaluated stably
            let softplus = if eta > 0.0 {
                eta + (-eta).exp().ln_1p()
            } else {
                eta.exp().ln_1p()
            };
            softplus - f64::from(y) * eta
        })
        .sum()
}

/// Gradient `(Σ (pᵢ - yᵢ) θᵢ, Σ (pᵢ - yᵢ))` computed row by row.
pub fn gradient_oracle(
    theta: &Matrix<f64>,
    labels: &[u8],
    omega: &[f64],
    b: f64,
) -> (Vec<f64>, f64) {
    let mut g = vec![0.0; omega.len()];
    let mut g0 = 0.0;
    for (row, &y) in theta.rows_iter().zip(labels) {
        let eta = b + row.iter().zip(omega).map(|(a, w)| a * w).sum::<f64>();
        let r = sigmoid(eta) - f64::from(y);
        for (gj, &x) in g.iter_mut().zip(row) {
            *gj += r * x;
        }
        g0 += r;
    }
    (g, g0)
}

/// Subgradient violation of `NLL + λ Σ_{detail} |ω|` recomputed from scratch.
pub fn kkt_oracle(
    data: &LabeledCoefficients<f64>,
    state: &LinearModelState<f64>,
    lambda: f64,
) -> f64 {
    let (g, g0) = gradient_oracle(data.theta(), data.labels(), &state.omega, state.intercept);
    let mut worst = g0.abs();
    for (j, (&w, &gj)) in state.omega.iter().zip(&g).enumerate() {
        let v = if j < data.n_scale() {
            gj.abs()
        } else if w == 0.0 {
            (gj.abs() - lambda).max(0.0)
        } else {
            (gj + lambda * w.signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Mann–Whitney AUC by enumerating every (positive, negative) pair.
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                den += 1.0;
                num += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}
