#![allow(dead_code)]

use hadamard_svm::smoothing::{per_sample_hinge, per_sample_smoothed_loss, smoothed_gradient_beta, smoothed_loss};
use hadamard_svm::{metrics, Dataset};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut impl Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal))
}

pub fn normal_vector(rng: &mut impl Rng, p: usize, scale: f64) -> Array1<f64> {
    Array1::from_shape_fn(p, |_| scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn random_labels(rng: &mut impl Rng, n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
}

pub fn random_dataset(rng: &mut impl Rng, n: usize, p: usize) -> Dataset {
    let x = normal_matrix(rng, n, p);
    let y = random_labels(rng, n);
    Dataset::new(x, y).unwrap()
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Largest violation of `E* <= E <= E* + gamma/2` per sample, over `trials`
/// random `(beta, dataset, gamma)` triples with `n` in `1..=50`.
pub fn sandwich_worst_violation(trials: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let n = rng.random_range(1..=50);
        let p = rng.random_range(1..=8);
        let d = random_dataset(&mut rng, n, p);
        let gamma = log_uniform(&mut rng, 1e-6, 1.0);
        let scale = log_uniform(&mut rng, 1e-3, 10.0);
        let beta = normal_vector(&mut rng, p, scale);
        let report = smoothed_loss(beta.view(), &d, gamma);
        for (&m, &smooth) in d.margins(beta.view()).iter().zip(report.per_sample.iter()) {
            assert_eq!(smooth, per_sample_smoothed_loss(m, gamma, n));
            let hinge = per_sample_hinge(m, n);
            worst = worst.max(smooth - hinge).max(hinge - smooth - gamma / 2.0);
        }
    }
    worst
}

/// `||g - fd||_inf / ||g||_inf` where `fd` is the central difference of the
/// smoothed loss with step `1e-6 max(1, |beta_j|)`.
pub fn gradient_relative_error(d: &Dataset, beta: &Array1<f64>, gamma: f64) -> f64 {
    let g = smoothed_gradient_beta(beta.view(), d, gamma);
    let mut diff: f64 = 0.0;
    for j in 0..beta.len() {
        let h = 1e-6 * beta[j].abs().max(1.0);
        let mut up = beta.clone();
        up[j] += h;
        let mut down = beta.clone();
        down[j] -= h;
        let fd = (smoothed_loss(up.view(), d, gamma).value - smoothed_loss(down.view(), d, gamma).value) / (2.0 * h);
        diff = diff.max((g[j] - fd).abs());
    }
    let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Worst gradient relative error over `points` random interior points.
pub fn gradient_worst_error(points: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let n = rng.random_range(5..=40);
        let p = rng.random_range(1..=10);
        let d = random_dataset(&mut rng, n, p);
        let gamma = log_uniform(&mut rng, 1e-3, 1e-1);
        let beta = normal_vector(&mut rng, p, 0.5);
        worst = worst.max(gradient_relative_error(&d, &beta, gamma));
    }
    worst
}

/// Count of random matrices (n in 4..=10, p in 2..=6) where the closed form
/// and the subset enumeration disagree.
pub fn coherence_mismatches(count: usize, seed: u64) -> usize {
    let mut rng = rng(seed);
    let mut bad = 0;
    for _ in 0..count {
        let n = rng.random_range(4..=10);
        let p = rng.random_range(2..=6);
        let x = normal_matrix(&mut rng, n, p);
        let a = metrics::coherence(x.view()).unwrap();
        let b = metrics::coherence_bruteforce(x.view()).unwrap();
        if a.delta.to_bits() != b.delta.to_bits() {
            bad += 1;
        }
    }
    bad
}

pub fn median(values: &[f64]) -> f64 {
    hadamard_svm::harness::quantile(values, 0.5)
}
