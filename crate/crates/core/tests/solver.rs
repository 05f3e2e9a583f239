mod common;

use hadamard_svm::datagen::{self, GenSpec, Signal};
use hadamard_svm::gd::{fit_gd, fit_gd_observed, gd_step, gradient_field};
use hadamard_svm::smoothing::mu_update;
use hadamard_svm::{metrics, Dataset, GdConfig, StopReason, Termination};
use ndarray::{array, Array1};
use proptest::prelude::*;

fn small_splits(seed: u64) -> datagen::Splits {
    let spec = GenSpec {
        n: 80,
        p: 40,
        signal: Signal::leading(5.0, 3),
        ..GenSpec::reference(seed)
    };
    datagen::generate(&spec).unwrap()
}

fn quick() -> GdConfig {
    GdConfig {
        t_max: 1500,
        ..GdConfig::default()
    }
}

#[test]
fn identical_inputs_give_identical_fits() {
    let s = small_splits(5);
    let a = fit_gd(&s.train, &s.validation, &quick()).unwrap();
    let b = fit_gd(&s.train, &s.validation, &quick()).unwrap();
    assert_eq!(a, b);
    let bits = |r: &hadamard_svm::FitResult| r.beta_hat.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn column_permutation_permutes_the_estimate() {
    let s = small_splits(6);
    let p = s.train.p();
    let mut rng = common::rng(6);
    let mut perm: Vec<usize> = (0..p).collect();
    use rand::seq::SliceRandom;
    perm.shuffle(&mut rng);
    let train = s.train.permute_columns(&perm).unwrap();
    let val = s.validation.permute_columns(&perm).unwrap();
    let base = fit_gd(&s.train, &s.validation, &quick()).unwrap();
    let moved = fit_gd(&train, &val, &quick()).unwrap();
    assert_eq!(base.t_selected, moved.t_selected);
    assert_eq!(base.t_final, moved.t_final);
    for (j, &src) in perm.iter().enumerate() {
        assert_eq!(moved.beta_hat[j].to_bits(), base.beta_hat[src].to_bits(), "column {j}");
    }
}

#[test]
fn factors_stay_positive_and_consistent() {
    let s = small_splits(7);
    let cfg = quick();
    let mut checked = 0;
    fit_gd_observed(&s.train, &s.validation, &cfg, |it| {
        if let Some(g) = it.gradient {
            assert!(g.0.iter().all(|gi| (2.0 * cfg.eta * gi).abs() < 1.0), "step condition at t={}", it.t);
        }
        let (w, v, beta) = (it.state.w(), it.state.v(), it.state.beta());
        for i in 0..w.len() {
            assert!(w[i] > 0.0 && v[i] > 0.0, "t={} i={i}", it.t);
            let direct = w[i] * w[i] - v[i] * v[i];
            let scale = (w[i] * w[i]).max(v[i] * v[i]);
            assert!((beta[i] - direct).abs() <= f64::EPSILON * scale, "t={} i={i}", it.t);
        }
        checked += 1;
    })
    .unwrap();
    assert!(checked > 10);
}

#[test]
fn zero_mu_means_zero_motion() {
    let d = Dataset::new(array![[2.0, 0.5], [-1.5, 0.3]], array![1.0, -1.0]).unwrap();
    let cfg = GdConfig {
        eta: 0.2,
        eval_every: 1,
        ..GdConfig::default()
    };
    let fit = fit_gd_observed(&d, &d, &cfg, |it| {
        if it.mu.is_zero() {
            let g = gradient_field(&d, it.mu).unwrap();
            let next = gd_step(it.state, &g, cfg.eta);
            assert_eq!(&next, it.state);
        }
    })
    .unwrap();
    assert_eq!(fit.termination, Termination::MuZero);
    let last = fit.checkpoints.last().unwrap();
    assert_eq!(last.t, fit.t_final);
    assert!(mu_update(last.beta.view(), &d, cfg.gamma).is_zero());
}

#[test]
fn no_iterations_no_estimate() {
    let s = small_splits(8);
    let cfg = GdConfig {
        t_max: 0,
        ..GdConfig::default()
    };
    let fit = fit_gd(&s.train, &s.validation, &cfg).unwrap();
    assert!(fit.beta_hat.iter().all(|&b| b == 0.0));
    assert_eq!(fit.stop_reason, StopReason::TMax);
}

#[test]
fn checkpoints_follow_the_schedule() {
    let s = small_splits(9);
    let cfg = GdConfig {
        t_max: 95,
        eval_every: 10,
        ..GdConfig::default()
    };
    let fit = fit_gd(&s.train, &s.validation, &cfg).unwrap();
    let ts: Vec<usize> = fit.checkpoints.iter().map(|c| c.t).collect();
    let last = *ts.last().unwrap();
    assert_eq!(last, fit.t_final);
    for (k, t) in ts.iter().enumerate().take(ts.len() - 1) {
        assert_eq!(*t, 10 * k);
    }
    let best = fit.checkpoints.iter().map(|c| c.val_error).fold(f64::INFINITY, f64::min);
    let first_best = fit.checkpoints.iter().find(|c| c.val_error == best).unwrap();
    assert_eq!(first_best.t, fit.t_selected);
    assert_eq!(first_best.beta, fit.beta_hat);
}

#[test]
fn reference_setup_direction_error() {
    // n = 200, p = 400, s = 4, m = 10, 30 seeds.
    let errors: Vec<f64> = (0..30)
        .map(|r| {
            let s = datagen::generate(&GenSpec::reference(20240601 + r)).unwrap();
            let fit = fit_gd(&s.train, &s.validation, &GdConfig::default()).unwrap();
            metrics::normalized_direction_error(fit.beta_hat.view(), s.truth.beta().view()).unwrap()
        })
        .collect();
    let med = common::median(&errors);
    assert!(med <= 0.1, "median direction error {med}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn step_keeps_positive_factors(
        w in prop::collection::vec(1e-12f64..10.0, 1..12),
        seed in any::<u64>(),
        eta in 0.01f64..0.45,
    ) {
        let p = w.len();
        let mut rng = common::rng(seed);
        let v = common::normal_vector(&mut rng, p, 1.0).mapv(|x| x.abs() + 1e-12);
        let state = hadamard_svm::OverParamState::from_factors(Array1::from(w), v).unwrap();
        let g = common::normal_vector(&mut rng, p, 1.0).mapv(|x| x.clamp(-1.0, 1.0));
        let next = gd_step(&state, &hadamard_svm::gd::GradientField(g.clone()), eta);
        for i in 0..p {
            prop_assert!(next.w()[i] > 0.0 && next.v()[i] > 0.0);
            prop_assert_eq!(next.w()[i], state.w()[i] * (1.0 + 2.0 * eta * g[i]));
            prop_assert_eq!(next.v()[i], state.v()[i] * (1.0 - 2.0 * eta * g[i]));
        }
    }

    #[test]
    fn random_small_problems_are_deterministic(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let train = common::random_dataset(&mut rng, 12, 5);
        let val = common::random_dataset(&mut rng, 12, 5);
        let cfg = GdConfig { t_max: 200, eval_every: 7, ..GdConfig::default() };
        prop_assert_eq!(fit_gd(&train, &val, &cfg).unwrap(), fit_gd(&train, &val, &cfg).unwrap());
    }
}
