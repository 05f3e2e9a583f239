use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hadamard_svm::baselines::{self, L1Config, LambdaGrid};
use hadamard_svm::datagen::{self, CovariateDist, GenSpec, Scheme, Signal, Structure};
use hadamard_svm::harness::{self, ExperimentSpec, RunOptions};
use hadamard_svm::{gd, metrics, Dataset, FitResult, GdConfig, GroundTruth};
use serde_json::json;

const DEFAULT_SEED: u64 = hadamard_svm::model::DEFAULT_SEED;

#[derive(Parser)]
#[command(name = "hsvm", version, about = "Sparse SVMs by gradient descent on a Hadamard-parameterized smoothed hinge loss")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/validation/test CSVs and the ground truth.
    Gen(GenArgs),
    /// Fit the over-parameterized gradient descent estimator.
    FitGd(FitGdArgs),
    /// Fit the l1-penalized SVM along a regularization path.
    FitLasso(FitLassoArgs),
    /// Fit on a known support.
    FitOracle(FitOracleArgs),
    /// Coherence of a dataset's column-normalized design.
    Coherence(CoherenceArgs),
    /// Run a named scenario or a JSON experiment spec and write the table.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Directory for train.csv, validation.csv, test.csv and truth.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Full generator spec as JSON; the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// default_logistic, model1_probit or model2_mixture.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    /// Signal strength on the support.
    #[arg(long)]
    m: Option<f64>,
    /// Number of leading signal coordinates.
    #[arg(long, conflicts_with = "structure")]
    s: Option<usize>,
    /// Support pattern A..E.
    #[arg(long)]
    structure: Option<String>,
    /// gaussian, uniform_pm1 or student_t3.
    #[arg(long)]
    covariate: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    validation: PathBuf,
    /// Held-out data for reporting accuracy.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Ground truth JSON for estimation and selection metrics.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Write the estimate and fit summary as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write per-checkpoint trajectory CSV here.
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

#[derive(Args)]
struct GdFlags {
    /// GdConfig as JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

impl GdFlags {
    fn resolve(&self) -> Result<GdConfig> {
        let mut cfg: GdConfig = read_config(self.config.as_deref())?;
        set(&mut cfg.alpha, self.alpha);
        set(&mut cfg.eta, self.eta);
        set(&mut cfg.gamma, self.gamma);
        set(&mut cfg.t_max, self.t_max);
        set(&mut cfg.eval_every, self.eval_every);
        cfg.seed = self.seed;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct FitGdArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    gd: GdFlags,
}

#[derive(Args)]
struct FitLassoArgs {
    #[command(flatten)]
    data: DataArgs,
    /// L1Config as JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Explicit descending grid, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["lambda_count", "lambda_ratio"])]
    lambdas: Option<Vec<f64>>,
    /// Grid size when the grid is relative to lambda_max.
    #[arg(long)]
    lambda_count: Option<usize>,
    /// Smallest grid value as a fraction of lambda_max.
    #[arg(long)]
    lambda_ratio: Option<f64>,
    #[arg(long)]
    inner_max_iter: Option<usize>,
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct FitOracleArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Zero-based support, comma separated. Defaults to the support in --truth.
    #[arg(long, value_delimiter = ',')]
    support: Option<Vec<usize>>,
    #[command(flatten)]
    gd: GdFlags,
}

#[derive(Args)]
struct CoherenceArgs {
    /// Dataset CSV; only the covariates are used.
    data: PathBuf,
    /// Sparsity level, to report the budget 1/(s log p).
    #[arg(long)]
    s: Option<usize>,
    /// Also enumerate all row subsets (at most 20 rows).
    #[arg(long)]
    brute_force: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Built-in scenario name, or a path to an experiment spec JSON.
    target: Option<String>,
    /// List the built-in scenarios and exit.
    #[arg(long)]
    list: bool,
    /// Output table CSV; defaults to <name>.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Base seed; replicate r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the resolved spec as JSON and exit.
    #[arg(long)]
    print_spec: bool,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn read_config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn parse_enum<T: serde::de::DeserializeOwned>(what: &str, s: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).with_context(|| format!("unknown {what} {s:?}"))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(a) => gen(a)?,
        Command::FitGd(a) => {
            let cfg = a.gd.resolve()?;
            fit_and_report("gd", &a.data, |train, val, _| Ok(gd::fit_gd(train, val, &cfg)?), true)?
        }
        Command::FitLasso(a) => {
            let cfg = lasso_config(&a)?;
            fit_and_report("lasso", &a.data, |train, val, _| Ok(baselines::fit_l1_svm(train, val, &cfg)?), false)?
        }
        Command::FitOracle(a) => {
            let cfg = a.gd.resolve()?;
            let support = a.support.clone();
            fit_and_report(
                "oracle",
                &a.data,
                |train, val, truth| {
                    let support = match (&support, truth) {
                        (Some(s), _) => s.clone(),
                        (None, Some(t)) => t.support.clone(),
                        (None, None) => bail!("fit-oracle needs --support or --truth"),
                    };
                    Ok(baselines::fit_oracle(train, val, &support, &cfg)?)
                },
                false,
            )?
        }
        Command::Coherence(a) => coherence(a)?,
        Command::Bench(a) => return bench(a),
    }
    Ok(ExitCode::SUCCESS)
}

fn gen(a: GenArgs) -> Result<()> {
    let mut spec = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => GenSpec::reference(a.seed),
    };
    spec.seed = a.seed;
    if let Some(s) = &a.scheme {
        spec.scheme = parse_enum::<Scheme>("scheme", s)?;
    }
    set(&mut spec.n, a.n);
    set(&mut spec.p, a.p);
    if let Some(c) = &a.covariate {
        spec.covariate_dist = parse_enum::<CovariateDist>("covariate distribution", c)?;
    }
    let current_m = match &spec.signal {
        Signal::Uniform { m, .. } => *m,
        Signal::Explicit(_) => f64::NAN,
    };
    let m = a.m.unwrap_or(current_m);
    if let Some(st) = &a.structure {
        let st = Structure::parse(st).with_context(|| format!("unknown structure {st:?}"))?;
        spec.signal = Signal::structure(m, st);
    } else if let Some(s) = a.s {
        spec.signal = Signal::leading(m, s);
    } else if let (Some(m), Signal::Uniform { m: slot, .. }) = (a.m, &mut spec.signal) {
        *slot = m;
    }
    let splits = datagen::generate(&spec)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    splits.train.write_csv(a.out_dir.join("train.csv"))?;
    splits.validation.write_csv(a.out_dir.join("validation.csv"))?;
    splits.test.write_csv(a.out_dir.join("test.csv"))?;
    splits.truth.write_json(a.out_dir.join("truth.json"))?;
    println!("{}", serde_json::to_string_pretty(&json!({ "out_dir": a.out_dir, "spec": spec }))?);
    Ok(())
}

fn lasso_config(a: &FitLassoArgs) -> Result<L1Config> {
    let mut cfg: L1Config = read_config(a.config.as_deref())?;
    if let Some(values) = &a.lambdas {
        cfg.lambda_grid = LambdaGrid::Explicit(values.clone());
    } else if a.lambda_count.is_some() || a.lambda_ratio.is_some() {
        let (mut count, mut ratio) = match cfg.lambda_grid {
            LambdaGrid::Relative { count, ratio } => (count, ratio),
            LambdaGrid::Explicit(_) => (30, 1e-3),
        };
        set(&mut count, a.lambda_count);
        set(&mut ratio, a.lambda_ratio);
        cfg.lambda_grid = LambdaGrid::Relative { count, ratio };
    }
    set(&mut cfg.inner_max_iter, a.inner_max_iter);
    set(&mut cfg.inner_tol, a.inner_tol);
    set(&mut cfg.gamma, a.gamma);
    set(&mut cfg.step, a.step);
    cfg.seed = a.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn fit_and_report(
    method: &str,
    data: &DataArgs,
    fit: impl FnOnce(&Dataset, &Dataset, Option<&GroundTruth>) -> Result<FitResult>,
    relative_threshold: bool,
) -> Result<()> {
    let train = Dataset::read_csv(&data.train)?;
    let val = Dataset::read_csv(&data.validation)?;
    let truth = data.truth.as_ref().map(GroundTruth::read_json).transpose()?;
    let result = fit(&train, &val, truth.as_ref())?;

    let beta = result.beta_hat.view();
    let selected = result.checkpoints.iter().find(|c| c.t == result.t_selected);
    let mut summary = json!({
        "method": method,
        "t_selected": result.t_selected,
        "t_final": result.t_final,
        "termination": result.termination,
        "stop_reason": result.stop_reason,
        "val_error": selected.map(|c| c.val_error),
        "lambda": selected.and_then(|c| c.lambda),
        "nonzeros": beta.iter().filter(|b| **b != 0.0).count(),
    });
    if let Some(path) = &data.test {
        let test = Dataset::read_csv(path)?;
        summary["test_accuracy"] = json!(metrics::accuracy(beta, &test));
    }
    if let Some(t) = &truth {
        let tau = metrics::selection_threshold(beta, !relative_threshold);
        let sel = metrics::selection_metrics(beta, t, tau)?;
        summary["direction_error"] = json!(metrics::normalized_direction_error(beta, t.beta().view()).ok());
        summary["relative_error"] = json!(metrics::relative_error(beta, t.beta().view())?);
        summary["false_positive"] = json!(sel.false_positive);
        summary["true_negative"] = json!(sel.true_negative);
    }
    if let Some(path) = &data.trajectory {
        result.write_trajectory_csv(path, truth.as_ref().map(|t| t.support.as_slice()))?;
    }
    if let Some(path) = &data.out {
        let mut full = summary.clone();
        full["beta_hat"] = json!(result.beta_hat.to_vec());
        fs::write(path, serde_json::to_string_pretty(&full)?).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn coherence(a: CoherenceArgs) -> Result<()> {
    let d = Dataset::read_csv(&a.data)?;
    let mut report = if a.brute_force {
        metrics::coherence_bruteforce(d.x.view())?
    } else {
        metrics::coherence(d.x.view())?
    };
    if let Some(s) = a.s {
        report = report.with_budget(s, d.p());
    }
    let mut out = serde_json::to_value(&report)?;
    if let Some(b) = report.budget {
        out["within_budget"] = json!(report.delta <= b);
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn bench(a: BenchArgs) -> Result<ExitCode> {
    if a.list {
        for s in harness::built_in_scenarios() {
            let methods: Vec<&str> = s.methods.iter().map(|m| m.name()).collect();
            println!(
                "{:<20} sweep {} over {} values, methods {}",
                s.name,
                s.sweep.variable.name(),
                s.sweep.values.len(),
                methods.join(",")
            );
        }
        return Ok(ExitCode::SUCCESS);
    }
    let Some(target) = a.target else {
        bail!("bench needs a scenario name or spec file (see --list)");
    };
    let mut spec = match harness::scenario(&target) {
        Some(s) => s,
        None => {
            let path = Path::new(&target);
            if !path.exists() {
                bail!("{target:?} is neither a built-in scenario nor a file");
            }
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentSpec::from_json(&text)?
        }
    };
    set(&mut spec.replicates, a.replicates);
    set(&mut spec.base_seed, a.seed);
    spec.validate()?;
    if a.print_spec {
        println!("{}", spec.to_json());
        return Ok(ExitCode::SUCCESS);
    }
    let table = harness::run_experiment_with(&spec, RunOptions { jobs: a.jobs })?;
    let out = a.out.unwrap_or_else(|| PathBuf::from(format!("{}.csv", spec.name)));
    table.write_csv(&out)?;
    let failed = table.failed_cells();
    let cells = table.raw.len();
    eprintln!("{}: {} rows written to {} ({failed} of {cells} fits failed)", spec.name, table.rows.len(), out.display());
    for rec in table.raw.iter().filter(|r| r.outcome.is_err()) {
        if let Err(e) = &rec.outcome {
            eprintln!("  {} = {}, {}, replicate {}: {e}", spec.sweep.variable.name(), rec.value, rec.method, rec.replicate);
        }
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
