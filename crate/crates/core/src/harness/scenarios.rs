use super::{ExperimentSpec, GenTemplate, Method, Sweep, SweptValue, SweptVar};
use crate::baselines::L1Config;
use crate::datagen::{CovariateDist, Scheme, Signal, Structure};
use crate::model::{GdConfig, DEFAULT_SEED};

const ALL_METHODS: [Method; 3] = [Method::Gd, Method::Lasso, Method::Oracle];

fn numbers(values: impl IntoIterator<Item = f64>) -> Vec<SweptValue> {
    values.into_iter().map(SweptValue::Number).collect()
}

fn base(name: &str, generator: GenTemplate, variable: SweptVar, values: Vec<SweptValue>, methods: &[Method]) -> ExperimentSpec {
    ExperimentSpec {
        name: name.to_string(),
        generator,
        sweep: Sweep { variable, values },
        methods: methods.to_vec(),
        replicates: 30,
        base_seed: DEFAULT_SEED,
        gd: GdConfig::default(),
        lasso: L1Config::default(),
    }
}

fn structures(name: &str, dist: CovariateDist) -> ExperimentSpec {
    let generator = GenTemplate {
        covariate_dist: dist,
        signal: Signal::structure(10.0, Structure::A),
        ..GenTemplate::reference()
    };
    let labels = Structure::ALL.iter().map(|s| SweptValue::Label(s.name().to_string())).collect();
    base(name, generator, SweptVar::Structure, labels, &ALL_METHODS)
}

fn fixed_model(name: &str, scheme: Scheme) -> ExperimentSpec {
    let generator = GenTemplate {
        scheme,
        ..GenTemplate::reference()
    };
    base(name, generator, SweptVar::N, numbers([200.0]), &ALL_METHODS)
}

/// The named experiments behind every figure of the simulation study, with
/// default settings and 30 replicates each.
pub fn built_in_scenarios() -> Vec<ExperimentSpec> {
    let reference = GenTemplate::reference();
    vec![
        base(
            "init-sweep",
            reference.clone(),
            SweptVar::Alpha,
            numbers([1e-4, 1e-6, 1e-8, 1e-10]),
            &[Method::Gd],
        ),
        base(
            "strength-sweep",
            reference.clone(),
            SweptVar::M,
            numbers((1..=20).map(|k| 0.5 * k as f64)),
            &ALL_METHODS,
        ),
        base(
            "sample-sweep",
            GenTemplate {
                signal: Signal::leading(5.0, 4),
                ..reference.clone()
            },
            SweptVar::N,
            numbers((1..=8).map(|k| 50.0 * k as f64)),
            &ALL_METHODS,
        ),
        structures("structures", CovariateDist::Gaussian),
        structures("structures-uniform", CovariateDist::UniformPm1),
        structures("structures-t3", CovariateDist::StudentT3),
        base(
            "gamma-sweep",
            reference,
            SweptVar::Gamma,
            numbers([2.5e-5, 5e-5, 1e-4, 2.5e-4, 5e-4, 1e-3]),
            &[Method::Gd],
        ),
        fixed_model("model1", Scheme::Model1Probit),
        fixed_model("model2", Scheme::Model2Mixture),
    ]
}

pub fn scenario(name: &str) -> Option<ExperimentSpec> {
    built_in_scenarios().into_iter().find(|s| s.name == name)
}
