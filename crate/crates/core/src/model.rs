//! Solver state, configuration and results shared by every estimator.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the over-parameterized gradient descent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdConfig {
    /// Initialization size: `w_0 = v_0 = alpha * 1`.
    pub alpha: f64,
    /// Step size.
    pub eta: f64,
    /// Smoothness of the hinge surrogate.
    pub gamma: f64,
    /// Iteration budget.
    pub t_max: usize,
    /// Validation checkpoint cadence.
    pub eval_every: usize,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 20240601;

impl Default for GdConfig {
    fn default() -> Self {
        GdConfig {
            alpha: 1e-8,
            eta: 0.5,
            gamma: 1e-4,
            t_max: 10_000,
            eval_every: 10,
            seed: DEFAULT_SEED,
        }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("eta", self.eta), ("gamma", self.gamma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidConfig("eval_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// The factor pair `(w, v)` together with the cached `beta = w*w - v*v`.
#[derive(Clone, Debug, PartialEq)]
pub struct OverParamState {
    w: Array1<f64>,
    v: Array1<f64>,
    beta: Array1<f64>,
}

impl OverParamState {
    /// `w = v = alpha * 1`, hence `beta = 0`.
    pub fn uniform(p: usize, alpha: f64) -> Self {
        Self::from_factors(Array1::from_elem(p, alpha), Array1::from_elem(p, alpha))
            .expect("equal lengths")
    }

    pub fn from_factors(w: Array1<f64>, v: Array1<f64>) -> Result<Self> {
        if w.len() != v.len() {
            return Err(Error::Shape(format!("w has {} entries, v has {}", w.len(), v.len())));
        }
        let beta = compose(w.view(), v.view());
        Ok(OverParamState { w, v, beta })
    }

    pub fn w(&self) -> ArrayView1<'_, f64> {
        self.w.view()
    }

    pub fn v(&self) -> ArrayView1<'_, f64> {
        self.v.view()
    }

    pub fn beta(&self) -> ArrayView1<'_, f64> {
        self.beta.view()
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    /// Multiplicative update `w <- w (1 + 2 eta g)`, `v <- v (1 - 2 eta g)`.
    pub fn step(&mut self, g: ArrayView1<'_, f64>, eta: f64) {
        debug_assert_eq!(g.len(), self.p());
        for (((w, v), b), &gi) in self
            .w
            .iter_mut()
            .zip(self.v.iter_mut())
            .zip(self.beta.iter_mut())
            .zip(g.iter())
        {
            let scaled = 2.0 * eta * gi;
            *w *= 1.0 + scaled;
            *v *= 1.0 - scaled;
            *b = *w * *w - *v * *v;
        }
    }

    pub fn into_beta(self) -> Array1<f64> {
        self.beta
    }
}

fn compose(w: ArrayView1<'_, f64>, v: ArrayView1<'_, f64>) -> Array1<f64> {
    ndarray::Zip::from(&w).and(&v).map_collect(|&a, &b| a * a - b * b)
}

/// Why the iteration loop ended.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Every sample had margin above 1, so the update was identically zero.
    MuZero,
    /// The iteration budget (or the end of a regularization path) was reached.
    TMax,
}

/// How the returned iterate was chosen.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MuZero,
    TMax,
    /// An earlier checkpoint beat the final iterate on validation error.
    ValidationSelected,
}

impl From<Termination> for StopReason {
    fn from(t: Termination) -> Self {
        match t {
            Termination::MuZero => StopReason::MuZero,
            Termination::TMax => StopReason::TMax,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: usize,
    /// Regularization level, for path-following estimators.
    pub lambda: Option<f64>,
    pub train_smoothed_loss: f64,
    pub val_hinge_loss: f64,
    /// Validation misclassification rate.
    pub val_error: f64,
    pub beta: Array1<f64>,
}

impl Checkpoint {
    pub fn val_accuracy(&self) -> f64 {
        1.0 - self.val_error
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta_hat: Array1<f64>,
    pub t_selected: usize,
    /// Iteration count when the loop stopped.
    pub t_final: usize,
    pub termination: Termination,
    pub stop_reason: StopReason,
    pub checkpoints: Vec<Checkpoint>,
}

impl FitResult {
    /// Picks the checkpoint with the lowest validation error, earliest on ties.
    pub(crate) fn select_earliest(
        checkpoints: Vec<Checkpoint>,
        t_final: usize,
        termination: Termination,
    ) -> FitResult {
        let best = best_index(&checkpoints, |a, b| a.t < b.t);
        Self::finish(checkpoints, best, t_final, termination)
    }

    pub(crate) fn finish(
        checkpoints: Vec<Checkpoint>,
        best: usize,
        t_final: usize,
        termination: Termination,
    ) -> FitResult {
        let chosen = &checkpoints[best];
        let stop_reason = if best + 1 == checkpoints.len() {
            termination.into()
        } else {
            StopReason::ValidationSelected
        };
        FitResult {
            beta_hat: chosen.beta.clone(),
            t_selected: chosen.t,
            t_final,
            termination,
            stop_reason,
            checkpoints,
        }
    }

    /// Writes `t,train_smoothed_loss,val_error,max_abs_offsupport,min_signal`
    /// per checkpoint. The last two columns need a support and are left empty
    /// without one.
    pub fn write_trajectory_csv(&self, path: impl AsRef<Path>, support: Option<&[usize]>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "t,train_smoothed_loss,val_error,max_abs_offsupport,min_signal").map_err(io)?;
        for c in &self.checkpoints {
            let (off, sig) = match support {
                Some(s) => {
                    let (off, sig) = support_summary(c.beta.view(), s);
                    (format!("{off:e}"), format!("{sig:e}"))
                }
                None => (String::new(), String::new()),
            };
            writeln!(
                w,
                "{},{:e},{:e},{off},{sig}",
                c.t, c.train_smoothed_loss, c.val_error
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// `(max |beta_i| off the support, min |beta_i| on it)`.
pub fn support_summary(beta: ArrayView1<'_, f64>, support: &[usize]) -> (f64, f64) {
    let mut on = vec![false; beta.len()];
    for &i in support {
        on[i] = true;
    }
    let mut off_max: f64 = 0.0;
    let mut on_min = f64::INFINITY;
    for (i, &b) in beta.iter().enumerate() {
        if on[i] {
            on_min = on_min.min(b.abs());
        } else {
            off_max = off_max.max(b.abs());
        }
    }
    (off_max, on_min)
}

pub(crate) fn best_index(cps: &[Checkpoint], prefer: impl Fn(&Checkpoint, &Checkpoint) -> bool) -> usize {
    let mut best = 0;
    for (i, c) in cps.iter().enumerate().skip(1) {
        let b = &cps[best];
        if c.val_error < b.val_error || (c.val_error == b.val_error && prefer(c, b)) {
            best = i;
        }
    }
    best
}
