//! Declarative experiments: one swept variable, several estimators, seeded
//! replicates, and median/quartile tables.
//!
//! An experiment is described by a JSON document:
//!
//! ```json
//! {
//!   "name": "strength-sweep",
//!   "generator": { "scheme": "default_logistic", "n": 200, "p": 400,
//!                  "signal": { "uniform": { "m": 10.0, "support": [0, 1, 2, 3] } },
//!                  "covariate_dist": "gaussian" },
//!   "sweep": { "variable": "m", "values": [0.5, 1.0, 1.5] },
//!   "methods": ["gd", "lasso", "oracle"],
//!   "replicates": 30,
//!   "base_seed": 20240601
//! }
//! ```
//!
//! Replicate `r` uses seed `base_seed + r` for every swept value, so rows at
//! different values are computed on matched data streams. Optional `gd` and
//! `lasso` objects override solver settings; the oracle uses the `gd`
//! settings.

mod scenarios;
mod table;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use scenarios::{built_in_scenarios, scenario};
pub use table::{
    format_float, quantile, quartiles, CellStatus, ExperimentTable, ReplicateRecord, SweptValue, TableRow, TABLE_HEADER,
};

use crate::baselines::{self, L1Config};
use crate::data::Dataset;
use crate::datagen::{self, CovariateDist, GenSpec, Scheme, Signal, Structure};
use crate::error::{Error, Result};
use crate::gd;
use crate::metrics;
use crate::model::{support_summary, FitResult, GdConfig, DEFAULT_SEED};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gd,
    Lasso,
    Oracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::Lasso => "lasso",
            Method::Oracle => "oracle",
        }
    }

    /// Whether the estimator produces exact zeros (selection threshold 0).
    pub fn exact_zeros(self) -> bool {
        !matches!(self, Method::Gd)
    }
}

/// The variable an experiment sweeps.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptVar {
    /// Signal strength.
    M,
    N,
    P,
    /// Number of leading signal coordinates.
    S,
    /// Named support pattern `A`..`E`.
    Structure,
    /// `gaussian`, `uniform_pm1` or `student_t3`.
    Covariate,
    Alpha,
    Eta,
    /// Smoothing of every method.
    Gamma,
}

impl SweptVar {
    pub fn name(self) -> &'static str {
        match self {
            SweptVar::M => "m",
            SweptVar::N => "n",
            SweptVar::P => "p",
            SweptVar::S => "s",
            SweptVar::Structure => "structure",
            SweptVar::Covariate => "covariate",
            SweptVar::Alpha => "alpha",
            SweptVar::Eta => "eta",
            SweptVar::Gamma => "gamma",
        }
    }

    fn takes_label(self) -> bool {
        matches!(self, SweptVar::Structure | SweptVar::Covariate)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweptVar,
    pub values: Vec<SweptValue>,
}

/// Generator settings without a seed; seeds come from the replicate index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenTemplate {
    pub scheme: Scheme,
    pub n: usize,
    pub p: usize,
    pub signal: Signal,
    #[serde(default = "gaussian")]
    pub covariate_dist: CovariateDist,
}

fn gaussian() -> CovariateDist {
    CovariateDist::Gaussian
}

impl GenTemplate {
    pub fn reference() -> GenTemplate {
        let g = GenSpec::reference(0);
        GenTemplate {
            scheme: g.scheme,
            n: g.n,
            p: g.p,
            signal: g.signal,
            covariate_dist: g.covariate_dist,
        }
    }

    pub fn with_seed(&self, seed: u64) -> GenSpec {
        GenSpec {
            scheme: self.scheme,
            n: self.n,
            p: self.p,
            signal: self.signal.clone(),
            covariate_dist: self.covariate_dist,
            seed,
        }
    }
}

fn default_replicates() -> usize {
    30
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub generator: GenTemplate,
    pub sweep: Sweep,
    pub methods: Vec<Method>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub gd: GdConfig,
    #[serde(default)]
    pub lasso: L1Config,
}

/// Everything one swept value resolves to.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub generator: GenTemplate,
    pub gd: GdConfig,
    pub lasso: L1Config,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<ExperimentSpec> {
        let spec: ExperimentSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("experiment spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("experiment {:?}: {m}", self.name)));
        if self.name.is_empty() {
            return bad("name is empty".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("no methods requested".into());
        }
        let mut methods = self.methods.clone();
        methods.sort();
        methods.dedup();
        if methods.len() != self.methods.len() {
            return bad("methods repeated".into());
        }
        if self.sweep.values.is_empty() {
            return bad("sweep has no values".into());
        }
        for v in &self.sweep.values {
            self.cell(v)?;
        }
        Ok(())
    }

    /// Applies one swept value to the template and solver settings.
    pub fn cell(&self, value: &SweptValue) -> Result<Cell> {
        let var = self.sweep.variable;
        let bad = |m: String| Error::InvalidConfig(format!("sweep over {}: {m}", var.name()));
        let mut cell = Cell {
            generator: self.generator.clone(),
            gd: self.gd.clone(),
            lasso: self.lasso.clone(),
        };
        let label = match value {
            SweptValue::Label(s) if var.takes_label() => s.as_str(),
            SweptValue::Number(_) if !var.takes_label() => "",
            _ => return Err(bad(format!("value {value} has the wrong kind"))),
        };
        let number = value.as_f64().unwrap_or(f64::NAN);
        let count = || -> Result<usize> {
            if number >= 1.0 && number.fract() == 0.0 && number <= 1e9 {
                Ok(number as usize)
            } else {
                Err(bad(format!("{number} is not a positive integer")))
            }
        };
        let g = &mut cell.generator;
        match var {
            SweptVar::M => match &mut g.signal {
                Signal::Uniform { m, .. } => *m = number,
                Signal::Explicit(_) => return Err(bad("template has an explicit beta*".into())),
            },
            SweptVar::N => g.n = count()?,
            SweptVar::P => g.p = count()?,
            SweptVar::S => match &mut g.signal {
                Signal::Uniform { support, .. } => *support = (0..count()?).collect(),
                Signal::Explicit(_) => return Err(bad("template has an explicit beta*".into())),
            },
            SweptVar::Structure => {
                let st = Structure::parse(label).ok_or_else(|| bad(format!("unknown structure {label:?}")))?;
                match &mut g.signal {
                    Signal::Uniform { support, .. } => *support = st.support(),
                    Signal::Explicit(_) => return Err(bad("template has an explicit beta*".into())),
                }
            }
            SweptVar::Covariate => {
                g.covariate_dist = serde_json::from_value(serde_json::Value::String(label.to_string()))
                    .map_err(|_| bad(format!("unknown covariate distribution {label:?}")))?;
            }
            SweptVar::Alpha => cell.gd.alpha = number,
            SweptVar::Eta => cell.gd.eta = number,
            SweptVar::Gamma => {
                cell.gd.gamma = number;
                cell.lasso.gamma = number;
            }
        }
        cell.generator.with_seed(0).validate()?;
        cell.gd.validate()?;
        cell.lasso.validate()?;
        Ok(cell)
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` uses all cores.
    pub jobs: Option<usize>,
}

/// Fits one method and returns its named metrics on the test split.
pub fn evaluate_method(method: Method, splits: &datagen::Splits, cell: &Cell) -> Result<Vec<(String, f64)>> {
    let fit = fit_method(method, &splits.train, &splits.validation, &splits.truth.support, cell)?;
    fit_metrics(method, &fit, splits)
}

pub fn fit_method(method: Method, train: &Dataset, validation: &Dataset, support: &[usize], cell: &Cell) -> Result<FitResult> {
    match method {
        Method::Gd => gd::fit_gd(train, validation, &cell.gd),
        Method::Lasso => baselines::fit_l1_svm(train, validation, &cell.lasso),
        Method::Oracle => baselines::fit_oracle(train, validation, support, &cell.gd),
    }
}

/// Metrics recorded per replicate. A zero estimate has no direction; its
/// direction error is taken against the zero vector, which is 1.
pub fn fit_metrics(method: Method, fit: &FitResult, splits: &datagen::Splits) -> Result<Vec<(String, f64)>> {
    let beta = fit.beta_hat.view();
    let truth = splits.truth.beta();
    let direction = if beta.iter().all(|&b| b == 0.0) {
        1.0
    } else {
        metrics::normalized_direction_error(beta, truth.view())?
    };
    let tau = metrics::selection_threshold(beta, method.exact_zeros());
    let sel = metrics::selection_metrics(beta, &splits.truth, tau)?;
    let (off, on) = support_summary(beta, &splits.truth.support);
    let mut out = vec![
        ("accuracy".to_string(), metrics::accuracy(beta, &splits.test)),
        ("direction_error".to_string(), direction),
        ("false_positive".to_string(), sel.false_positive as f64),
        ("max_abs_offsupport".to_string(), off),
        ("min_signal".to_string(), on),
        ("relative_error".to_string(), metrics::relative_error(beta, truth.view())?),
        ("t_selected".to_string(), fit.t_selected as f64),
        ("true_negative".to_string(), sel.true_negative as f64),
    ];
    for (k, &j) in splits.truth.support.iter().enumerate() {
        out.push((format!("signal_{}", k + 1), fit.beta_hat[j]));
    }
    Ok(out)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentTable> {
    run_experiment_with(spec, RunOptions::default())
}

/// Runs every `(value, replicate)` task, fitting each method on the same
/// data. A failing fit becomes a failed cell; the sweep goes on.
pub fn run_experiment_with(spec: &ExperimentSpec, opts: RunOptions) -> Result<ExperimentTable> {
    spec.validate()?;
    let cells: Vec<Cell> = spec.sweep.values.iter().map(|v| spec.cell(v)).collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|v| (0..spec.replicates).map(move |r| (v, r)))
        .collect();
    let run = || -> Vec<Vec<ReplicateRecord>> {
        tasks
            .par_iter()
            .map(|&(vi, r)| run_task(spec, &cells[vi], &spec.sweep.values[vi], r))
            .collect()
    };
    let per_task = match opts.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let raw: Vec<ReplicateRecord> = per_task.into_iter().flatten().collect();
    Ok(aggregate(spec.sweep.variable.name(), raw))
}

fn run_task(spec: &ExperimentSpec, cell: &Cell, value: &SweptValue, r: usize) -> Vec<ReplicateRecord> {
    let seed = spec.base_seed.wrapping_add(r as u64);
    let splits = datagen::generate(&cell.generator.with_seed(seed));
    spec.methods
        .iter()
        .map(|&m| ReplicateRecord {
            value: value.clone(),
            method: m.name().to_string(),
            replicate: r,
            seed,
            outcome: splits
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|s| evaluate_method(m, s, cell).map_err(|e| e.to_string())),
        })
        .collect()
}

/// Groups replicate records by `(value, method)` and summarizes each metric.
pub fn aggregate(swept_var: &str, raw: Vec<ReplicateRecord>) -> ExperimentTable {
    let mut groups: Vec<(SweptValue, String, Vec<&ReplicateRecord>)> = Vec::new();
    for rec in &raw {
        match groups
            .iter_mut()
            .find(|(v, m, _)| v.total_cmp(&rec.value).is_eq() && *m == rec.method)
        {
            Some(g) => g.2.push(rec),
            None => groups.push((rec.value.clone(), rec.method.clone(), vec![rec])),
        }
    }
    let mut rows = Vec::new();
    for (value, method, recs) in groups {
        let total = recs.len();
        let failed = recs.iter().filter(|r| r.outcome.is_err()).count();
        let status = if failed == 0 {
            CellStatus::Ok
        } else {
            CellStatus::Failed { failed, total }
        };
        let mut by_metric: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for rec in &recs {
            if let Ok(values) = &rec.outcome {
                for (name, v) in values {
                    by_metric.entry(name.as_str()).or_default().push(*v);
                }
            }
        }
        if by_metric.is_empty() {
            // Nothing succeeded: keep one placeholder row so the cell is visible.
            by_metric.insert("direction_error", Vec::new());
        }
        for (metric, values) in by_metric {
            let (q25, median, q75) = if failed == 0 {
                quartiles(&values)
            } else {
                (f64::NAN, f64::NAN, f64::NAN)
            };
            rows.push(TableRow {
                value: value.clone(),
                method: method.clone(),
                metric: metric.to_string(),
                median,
                q25,
                q75,
                status: status.clone(),
            });
        }
    }
    let mut table = ExperimentTable {
        swept_var: swept_var.to_string(),
        rows,
        raw,
    };
    table.sort_rows();
    table
}
