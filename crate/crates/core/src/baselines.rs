//! Comparison estimators: an l1-penalized SVM fit along a regularization
//! path, and an oracle fit that is told the true support.
//!
//! Both work on the same smoothed hinge loss as the main solver so that the
//! comparison isolates the effect of the regularization mechanism.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gd::check_divergence;
use crate::linalg;
use crate::metrics;
use crate::model::{Checkpoint, FitResult, GdConfig, Termination, DEFAULT_SEED};
use crate::smoothing::{self, MuVector};

/// `sign(z) * max(|z| - theta, 0)`.
#[inline]
pub fn soft_threshold(z: f64, theta: f64) -> f64 {
    debug_assert!(theta >= 0.0);
    if z > theta {
        z - theta
    } else if z < -theta {
        z + theta
    } else {
        0.0
    }
}

/// Smallest `lambda` for which `beta = 0` is a fixed point of the proximal
/// iteration. This is `||grad f(0)||_inf`; every margin is zero at the
/// origin, so `mu = min(1, 1/(gamma n))` and the gradient reduces to a
/// multiple of `(1/n) X^T y`.
pub fn lambda_max(d: &Dataset, gamma: f64) -> f64 {
    let n = d.n() as f64;
    let mu0 = (1.0 / (gamma * n)).min(1.0);
    let xty = linalg::mat_t_vec(d.x.view(), d.y.view());
    mu0 * linalg::norm_inf(xty.view()) / n
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaGrid {
    /// `count` log-spaced values from `lambda_max` down to
    /// `ratio * lambda_max`.
    Relative { count: usize, ratio: f64 },
    Explicit(Vec<f64>),
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Relative { count: 30, ratio: 1e-3 }
    }
}

impl LambdaGrid {
    pub fn validate(&self) -> Result<()> {
        match self {
            LambdaGrid::Relative { count, ratio } => {
                if *count == 0 {
                    return Err(Error::InvalidConfig("lambda grid needs at least one value".into()));
                }
                if !(ratio.is_finite() && *ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::InvalidConfig(format!("lambda ratio must lie in (0, 1), got {ratio}")));
                }
            }
            LambdaGrid::Explicit(values) => {
                if values.is_empty() {
                    return Err(Error::InvalidConfig("lambda grid needs at least one value".into()));
                }
                if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    return Err(Error::InvalidConfig(format!("lambda values must be positive, got {v}")));
                }
                if values.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(Error::InvalidConfig("lambda grid must be strictly decreasing".into()));
                }
            }
        }
        Ok(())
    }

    /// The concrete descending grid for a training set.
    pub fn resolve(&self, train: &Dataset, gamma: f64) -> Vec<f64> {
        match self {
            LambdaGrid::Explicit(values) => values.clone(),
            LambdaGrid::Relative { count, ratio } => {
                let top = lambda_max(train, gamma);
                if *count == 1 {
                    return vec![top];
                }
                let log_ratio = ratio.ln();
                (0..*count)
                    .map(|k| top * (log_ratio * k as f64 / (*count - 1) as f64).exp())
                    .collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct L1Config {
    pub lambda_grid: LambdaGrid,
    pub inner_max_iter: usize,
    /// Stop an inner solve once `||beta_new - beta||_inf` drops below this.
    pub inner_tol: f64,
    pub gamma: f64,
    /// Initial proximal step; halved by backtracking as needed.
    pub step: f64,
    pub seed: u64,
}

impl Default for L1Config {
    fn default() -> Self {
        L1Config {
            lambda_grid: LambdaGrid::default(),
            inner_max_iter: 5000,
            inner_tol: 1e-8,
            gamma: 1e-4,
            step: 0.5,
            seed: DEFAULT_SEED,
        }
    }
}

impl L1Config {
    pub fn validate(&self) -> Result<()> {
        self.lambda_grid.validate()?;
        for (name, v) in [("gamma", self.gamma), ("step", self.step), ("inner_tol", self.inner_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.inner_max_iter == 0 {
            return Err(Error::InvalidConfig("inner_max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// The design stored feature-major, so that `X beta` over the active columns
/// walks contiguous memory. Sums here are plain sequential ones; the path
/// solver has no exactness requirement.
struct Columns<'a> {
    d: &'a Dataset,
    xt: Array2<f64>,
}

impl<'a> Columns<'a> {
    fn new(d: &'a Dataset) -> Self {
        Columns {
            d,
            xt: d.x.t().as_standard_layout().into_owned(),
        }
    }

    fn point(&self, beta: Array1<f64>, gamma: f64) -> Point {
        let mut margins = Array1::<f64>::zeros(self.d.n());
        for (col, &b) in self.xt.rows().into_iter().zip(beta.iter()) {
            if b != 0.0 {
                margins.scaled_add(b, &col);
            }
        }
        margins *= &self.d.y;
        let loss = smoothing::smoothed_loss_value(margins.view(), gamma);
        Point { beta, margins, loss }
    }

    /// `-(1/n) X^T (y * mu)` at a point.
    fn gradient(&self, pt: &Point, gamma: f64) -> Array1<f64> {
        smoothing::gradient_from_mu(self.d, &smoothing::mu_from_margins(pt.margins.view(), gamma))
    }
}

struct Point {
    beta: Array1<f64>,
    margins: Array1<f64>,
    loss: f64,
}

/// Outcome of one inner proximal-gradient solve.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerSolve {
    pub beta: Array1<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Step size in force when the solve ended.
    pub step: f64,
    /// Composite objective after each accepted iteration, starting with the
    /// value at the initial point.
    pub objective: Vec<f64>,
}

const MAX_HALVINGS: usize = 200;

/// Proximal gradient on `smoothed_loss(beta) + lambda ||beta||_1` from `start`.
///
/// A trial step `s` is accepted when
/// `f(b+) <= f(b) + grad . (b+ - b) + ||b+ - b||^2 / (2 s)`,
/// otherwise `s` is halved. Accepted steps never increase the composite
/// objective.
pub fn prox_gradient(
    train: &Dataset,
    start: Array1<f64>,
    lambda: f64,
    step: f64,
    gamma: f64,
    max_iter: usize,
    tol: f64,
) -> Result<InnerSolve> {
    if start.len() != train.p() {
        return Err(Error::Shape(format!("start has {} entries, dataset has {} features", start.len(), train.p())));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let composite = |pt: &Point| pt.loss + lambda * pt.beta.iter().map(|b| b.abs()).sum::<f64>();
    let cols = Columns::new(train);
    let mut step = step;
    let mut cur = cols.point(start, gamma);
    let mut objective = vec![composite(&cur)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let grad = cols.gradient(&cur, gamma);
        let mut halvings = 0;
        let (next, change) = loop {
            let trial = ndarray::Zip::from(&cur.beta)
                .and(&grad)
                .map_collect(|&b, &g| soft_threshold(b - step * g, step * lambda));
            let diff = &trial - &cur.beta;
            let change = linalg::norm_inf(diff.view());
            let pt = cols.point(trial, gamma);
            let model = cur.loss + grad.dot(&diff) + diff.dot(&diff) / (2.0 * step);
            if change == 0.0 || pt.loss <= model {
                break (pt, change);
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::Divergence {
                    iteration: iterations,
                    reason: "backtracking could not find an acceptable step".into(),
                });
            }
            step /= 2.0;
        };
        iterations += 1;
        check_divergence(next.beta.view(), iterations)?;
        cur = next;
        objective.push(composite(&cur));
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(InnerSolve {
        beta: cur.beta,
        iterations,
        converged,
        step,
        objective,
    })
}

/// l1-penalized smoothed-hinge SVM along the grid, warm-started from one
/// value to the next. Each grid value produces a checkpoint whose `t` is the
/// cumulative inner iteration count. The returned fit has the lowest
/// validation error, with ties going to the larger `lambda`.
pub fn fit_l1_svm(train: &Dataset, validation: &Dataset, cfg: &L1Config) -> Result<FitResult> {
    cfg.validate()?;
    check_widths(train, validation)?;
    let grid = cfg.lambda_grid.resolve(train, cfg.gamma);
    let mut beta = Array1::zeros(train.p());
    let mut checkpoints = Vec::with_capacity(grid.len());
    let mut total = 0;
    for &lambda in &grid {
        let solve = prox_gradient(train, beta, lambda, cfg.step, cfg.gamma, cfg.inner_max_iter, cfg.inner_tol)?;
        total += solve.iterations;
        beta = solve.beta;
        let mut cp = evaluate(total, beta.view(), train, validation, cfg.gamma);
        cp.lambda = Some(lambda);
        checkpoints.push(cp);
    }
    Ok(FitResult::select_earliest(checkpoints, total, Termination::TMax))
}

/// Smoothed-hinge gradient descent restricted to `support`, with the same
/// stopping and validation selection as the main solver. Coordinates outside
/// the support stay exactly zero.
pub fn fit_oracle(train: &Dataset, validation: &Dataset, support: &[usize], cfg: &GdConfig) -> Result<FitResult> {
    cfg.validate()?;
    check_widths(train, validation)?;
    let p = train.p();
    if support.is_empty() {
        return Err(Error::InvalidArgument("oracle support is empty".into()));
    }
    if let Some(&j) = support.iter().find(|&&j| j >= p) {
        return Err(Error::InvalidArgument(format!("support index {j} out of range for p = {p}")));
    }
    let mut cols = support.to_vec();
    cols.sort_unstable();
    cols.dedup();

    let mut beta = Array1::<f64>::zeros(p);
    let mut checkpoints = Vec::with_capacity(cfg.t_max / cfg.eval_every + 2);
    let mut t = 0;
    let termination = loop {
        let mut margins = linalg::mat_vec_cols(train.x.view(), beta.view(), &cols);
        margins *= &train.y;
        let mu = smoothing::mu_from_margins(margins.view(), cfg.gamma);
        if t % cfg.eval_every == 0 {
            checkpoints.push(checkpoint_from(t, &margins, beta.view(), validation, cfg.gamma, &cols));
        }
        let done = if mu.is_zero() {
            Some(Termination::MuZero)
        } else if t >= cfg.t_max {
            Some(Termination::TMax)
        } else {
            None
        };
        if let Some(reason) = done {
            if checkpoints.last().map(|c| c.t) != Some(t) {
                checkpoints.push(checkpoint_from(t, &margins, beta.view(), validation, cfg.gamma, &cols));
            }
            break reason;
        }
        let g = restricted_gradient(train, &mu, &cols);
        for (&j, gj) in cols.iter().zip(g) {
            beta[j] -= cfg.eta * gj;
        }
        t += 1;
        check_divergence(beta.view(), t)?;
    };
    Ok(FitResult::select_earliest(checkpoints, t, termination))
}

fn restricted_gradient(d: &Dataset, mu: &MuVector, cols: &[usize]) -> Vec<f64> {
    let n = d.n() as f64;
    let mut g = vec![0.0; cols.len()];
    for ((row, &y), &m) in d.x.rows().into_iter().zip(d.y.iter()).zip(mu.0.iter()) {
        if m == 0.0 {
            continue;
        }
        let u = y * m;
        for (gk, &j) in g.iter_mut().zip(cols) {
            *gk += u * row[j];
        }
    }
    g.iter().map(|v| -v / n).collect()
}

fn check_widths(train: &Dataset, validation: &Dataset) -> Result<()> {
    if train.p() != validation.p() {
        return Err(Error::Shape(format!(
            "train has {} features, validation has {}",
            train.p(),
            validation.p()
        )));
    }
    Ok(())
}

fn evaluate(t: usize, beta: ArrayView1<'_, f64>, train: &Dataset, validation: &Dataset, gamma: f64) -> Checkpoint {
    let cols: Vec<usize> = beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect();
    let mut margins = linalg::mat_vec_cols(train.x.view(), beta, &cols);
    margins *= &train.y;
    checkpoint_from(t, &margins, beta, validation, gamma, &cols)
}

fn checkpoint_from(
    t: usize,
    train_margins: &Array1<f64>,
    beta: ArrayView1<'_, f64>,
    validation: &Dataset,
    gamma: f64,
    cols: &[usize],
) -> Checkpoint {
    let scores = linalg::mat_vec_cols(validation.x.view(), beta, cols);
    let errors = scores
        .iter()
        .zip(validation.y.iter())
        .filter(|(&s, &y)| metrics::predict_label(s) != y)
        .count();
    let val_margins = scores * &validation.y;
    Checkpoint {
        t,
        lambda: None,
        train_smoothed_loss: smoothing::smoothed_loss_value(train_margins.view(), gamma),
        val_hinge_loss: smoothing::hinge_from_margins(val_margins.view()),
        val_error: errors as f64 / validation.n() as f64,
        beta: beta.to_owned(),
    }
}
