mod common;

use hadamard_svm::datagen::{
    self, gen_model1, gen_model2, CovariateDist, GenSpec, Signal, Structure, MODEL2_BAYES_DIRECTION,
};
use hadamard_svm::Dataset;
use ndarray::Axis;

const BIG: usize = 100_000;

fn column_mean_var(d: &Dataset, j: usize) -> (f64, f64) {
    let col = d.x.column(j);
    let n = col.len() as f64;
    let mean = col.sum() / n;
    let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0)
}

fn big_default(dist: CovariateDist, signal: Signal, seed: u64) -> Dataset {
    let spec = GenSpec {
        n: BIG,
        p: 3,
        signal,
        covariate_dist: dist,
        ..GenSpec::reference(seed)
    };
    datagen::generate(&spec).unwrap().train
}

#[test]
fn covariate_moments_match_their_distributions() {
    // (distribution, variance, fourth moment) of a single coordinate.
    let cases = [
        (CovariateDist::Gaussian, 1.0, 3.0),
        (CovariateDist::UniformPm1, 1.0 / 3.0, 1.0 / 5.0),
    ];
    for (dist, var, m4) in cases {
        let d = big_default(dist, Signal::leading(1.0, 1), 31);
        for j in 0..3 {
            let (mean, v) = column_mean_var(&d, j);
            let se_mean = (var / BIG as f64).sqrt();
            let se_var = ((m4 - var * var) / BIG as f64).sqrt();
            assert!(mean.abs() < 3.0 * se_mean, "{dist:?} col {j} mean {mean}");
            assert!((v - var).abs() < 3.0 * se_var, "{dist:?} col {j} var {v}");
        }
    }
    // t(3) has infinite fourth moment, so the variance gets a fixed band.
    let d = big_default(CovariateDist::StudentT3, Signal::leading(1.0, 1), 32);
    for j in 0..3 {
        let (mean, v) = column_mean_var(&d, j);
        assert!(mean.abs() < 3.0 * (3.0 / BIG as f64).sqrt(), "t3 col {j} mean {mean}");
        assert!((v - 3.0).abs() < 0.3, "t3 col {j} var {v}");
    }
}

#[test]
fn zero_signal_gives_fair_coins() {
    let d = big_default(CovariateDist::Gaussian, Signal::leading(0.0, 1), 33);
    let plus = d.y.iter().filter(|&&y| y > 0.0).count() as f64 / BIG as f64;
    assert!((plus - 0.5).abs() < 3.0 * (0.25 / BIG as f64).sqrt(), "{plus}");
    // And independent of x.
    let x0: Vec<f64> = d.x.column(0).to_vec();
    let y: Vec<f64> = d.y.to_vec();
    assert!(covariance(&x0, &y).abs() < 3.0 / (BIG as f64).sqrt());
}

#[test]
fn positive_score_favours_positive_label() {
    for r in 0..30 {
        let s = datagen::generate(&GenSpec::reference(20240601 + r)).unwrap();
        let beta = s.truth.beta();
        let mut pos = 0usize;
        let mut plus = 0usize;
        for (row, &y) in s.train.x.axis_iter(Axis(0)).zip(s.train.y.iter()) {
            if row.dot(&beta) > 0.0 {
                pos += 1;
                if y > 0.0 {
                    plus += 1;
                }
            }
        }
        assert!(plus as f64 / pos as f64 > 0.5, "seed offset {r}");
    }
}

#[test]
fn structures_are_one_based() {
    assert_eq!(Structure::E.support(), vec![0, 5, 10, 11]);
    let spec = GenSpec {
        signal: Signal::structure(10.0, Structure::E),
        ..GenSpec::reference(1)
    };
    let s = datagen::generate(&spec).unwrap();
    assert_eq!(s.truth.support, vec![0, 5, 10, 11]);
}

#[test]
fn model1_has_ar1_covariance() {
    let d = gen_model1(BIG, 6, 34).unwrap().train;
    for j in 0..6 {
        let (_, v) = column_mean_var(&d, j);
        assert!((v - 1.0).abs() < 0.02, "var {j} {v}");
    }
    for j in 0..5 {
        let a = d.x.column(j).to_vec();
        let b = d.x.column(j + 1).to_vec();
        let c = covariance(&a, &b);
        assert!((c - 0.4).abs() < 0.02, "cov {j} {c}");
    }
    let truth = gen_model1(10, 6, 34).unwrap().truth;
    assert_eq!(truth.beta_star, vec![1.1, 1.1, 1.1, 1.1, 0.0, 0.0]);
}

#[test]
fn model2_moments_and_bayes_error() {
    let d = gen_model2(BIG, 8, 35).unwrap().train;
    let plus = d.y.iter().filter(|&&y| y > 0.0).count() as f64 / BIG as f64;
    assert!((plus - 0.5).abs() < 0.01, "{plus}");

    // Within-class covariance of the first two coordinates.
    for class in [1.0, -1.0] {
        let rows: Vec<usize> = (0..BIG).filter(|&i| d.y[i] == class).collect();
        let a: Vec<f64> = rows.iter().map(|&i| d.x[[i, 0]]).collect();
        let b: Vec<f64> = rows.iter().map(|&i| d.x[[i, 1]]).collect();
        let c = covariance(&a, &b);
        assert!((c + 0.2).abs() < 0.02, "class {class}: {c}");
    }

    let wrong = (0..BIG)
        .filter(|&i| {
            let score: f64 = (0..5).map(|j| MODEL2_BAYES_DIRECTION[j] * d.x[[i, j]]).sum();
            let pred = if score >= 0.0 { 1.0 } else { -1.0 };
            pred != d.y[i]
        })
        .count();
    let err = wrong as f64 / BIG as f64;
    assert!((err - 0.063).abs() <= 0.005, "Bayes error {err}");
}

#[test]
fn same_seed_same_splits_different_seed_different_data() {
    let a = datagen::generate(&GenSpec::reference(40)).unwrap();
    let b = datagen::generate(&GenSpec::reference(40)).unwrap();
    let c = datagen::generate(&GenSpec::reference(41)).unwrap();
    assert_eq!(a.train, b.train);
    assert_eq!(a.test, b.test);
    assert_ne!(a.train, c.train);
    assert_ne!(a.train, a.validation);
}
