//! Gradient descent on the Hadamard-parameterized smoothed hinge loss.
//!
//! With `beta = w*w - v*v`, the gradient of the smoothed loss with respect to
//! `w` is `-2 G * w` and with respect to `v` is `2 G * v`, where
//! `G = (1/n) X^T (y * mu)`. Each step is therefore a coordinatewise
//! multiplicative update, and coordinates that start near zero stay near zero
//! unless the data keep pushing them in one direction. Starting from a tiny
//! `alpha` is what makes the iterates sparse without any penalty.

use ndarray::{Array1, ArrayView1};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics;
use crate::model::{Checkpoint, FitResult, GdConfig, OverParamState, Termination};
use crate::smoothing::{self, MuVector};

/// `G = (1/n) X^T (y * mu)`, the negative `beta`-gradient of the smoothed
/// loss.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField(pub Array1<f64>);

impl GradientField {
    pub fn view(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }
}

pub fn gradient_field(d: &Dataset, mu: &MuVector) -> Result<GradientField> {
    if mu.len() != d.n() {
        return Err(Error::Shape(format!("mu has {} entries, dataset has {} samples", mu.len(), d.n())));
    }
    let u = &d.y * &mu.0;
    let mut g = linalg::mat_t_vec(d.x.view(), u.view());
    let n = d.n() as f64;
    g.mapv_inplace(|v| v / n);
    Ok(GradientField(g))
}

/// One multiplicative step, returning the new state.
pub fn gd_step(state: &OverParamState, g: &GradientField, eta: f64) -> OverParamState {
    let mut next = state.clone();
    next.step(g.view(), eta);
    next
}

/// Ceiling on `||beta||_inf` before a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// What an observer sees once per iteration, before the update is applied.
/// `gradient` is `None` on the last visit, when the loop is about to stop.
pub struct IterationView<'a> {
    pub t: usize,
    pub state: &'a OverParamState,
    pub mu: &'a MuVector,
    pub gradient: Option<&'a GradientField>,
}

pub fn fit_gd(train: &Dataset, validation: &Dataset, cfg: &GdConfig) -> Result<FitResult> {
    fit_gd_observed(train, validation, cfg, |_| {})
}

/// [`fit_gd`] with a callback invoked at every iteration.
pub fn fit_gd_observed<F>(train: &Dataset, validation: &Dataset, cfg: &GdConfig, mut observe: F) -> Result<FitResult>
where
    F: FnMut(&IterationView<'_>),
{
    cfg.validate()?;
    if train.p() != validation.p() {
        return Err(Error::Shape(format!(
            "train has {} features, validation has {}",
            train.p(),
            validation.p()
        )));
    }

    let mut state = OverParamState::uniform(train.p(), cfg.alpha);
    let mut checkpoints = Vec::with_capacity(cfg.t_max / cfg.eval_every + 2);
    let mut t = 0;
    let termination = loop {
        let margins = train.margins(state.beta());
        let mu = smoothing::mu_from_margins(margins.view(), cfg.gamma);
        if t % cfg.eval_every == 0 {
            checkpoints.push(checkpoint(t, &margins, cfg.gamma, state.beta(), validation));
        }
        let done = if mu.is_zero() {
            Some(Termination::MuZero)
        } else if t >= cfg.t_max {
            Some(Termination::TMax)
        } else {
            None
        };
        if let Some(reason) = done {
            observe(&IterationView {
                t,
                state: &state,
                mu: &mu,
                gradient: None,
            });
            if checkpoints.last().map(|c| c.t) != Some(t) {
                checkpoints.push(checkpoint(t, &margins, cfg.gamma, state.beta(), validation));
            }
            break reason;
        }

        let g = gradient_field(train, &mu)?;
        observe(&IterationView {
            t,
            state: &state,
            mu: &mu,
            gradient: Some(&g),
        });
        state.step(g.view(), cfg.eta);
        t += 1;
        check_divergence(state.beta(), t)?;
    };
    Ok(FitResult::select_earliest(checkpoints, t, termination))
}

fn checkpoint(
    t: usize,
    train_margins: &Array1<f64>,
    gamma: f64,
    beta: ArrayView1<'_, f64>,
    validation: &Dataset,
) -> Checkpoint {
    let scores = linalg::mat_vec(validation.x.view(), beta);
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

pub(crate) fn check_divergence(beta: ArrayView1<'_, f64>, iteration: usize) -> Result<()> {
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Divergence {
            iteration,
            reason: "non-finite coefficient".into(),
        });
    }
    let inf = linalg::norm_inf(beta);
    if inf > DIVERGENCE_LIMIT {
        return Err(Error::Divergence {
            iteration,
            reason: format!("||beta||_inf = {inf:e} exceeds {DIVERGENCE_LIMIT:e}"),
        });
    }
    Ok(())
}
