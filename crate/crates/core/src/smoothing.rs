//! The smoothed hinge loss.
//!
//! The hinge term `(1 - margin)_+ / n` of one sample is the maximum of
//! `(1 - margin) * mu / n` over `mu` in `[0, 1]`. Subtracting the prox term
//! `(gamma / 2) * mu^2` makes the maximizer unique and the loss differentiable:
//!
//! ```text
//! mu      = clamp((1 - margin) / (gamma * n), 0, 1)
//! E*_i    = 0                                 margin >= 1
//!         = (1 - margin) / n - gamma / 2      margin <= 1 - gamma * n
//!         = (1 - margin)^2 / (2 gamma n^2)    otherwise
//! ```
//!
//! and `E*_i <= (1 - margin)_+ / n <= E*_i + gamma / 2` for every sample.
//! Ties at the two boundaries go to the zero branch (margin exactly 1) and to
//! the linear branch (margin exactly `1 - gamma * n`).

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::linalg::{self, exact_sum};

/// Dual weights `mu`, one per sample, each in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuVector(pub Array1<f64>);

impl MuVector {
    pub fn zeros(n: usize) -> Self {
        MuVector(Array1::zeros(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every sample is inactive, i.e. all margins exceed 1.
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&m| m == 0.0)
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }
}

/// Which piece of the smoothed loss a sample falls on.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Zero,
    Linear,
    Quadratic,
}

impl Branch {
    #[inline]
    pub fn of(margin: f64, gamma: f64, n: usize) -> Branch {
        if margin >= 1.0 {
            Branch::Zero
        } else if margin <= 1.0 - gamma * n as f64 {
            Branch::Linear
        } else {
            Branch::Quadratic
        }
    }
}

#[inline]
fn mu_for(margin: f64, gamma: f64, n: usize) -> f64 {
    match Branch::of(margin, gamma, n) {
        Branch::Zero => 0.0,
        Branch::Linear => 1.0,
        Branch::Quadratic => ((1.0 - margin) / (gamma * n as f64)).clamp(0.0, 1.0),
    }
}

/// Smoothed loss of one sample with the given margin.
#[inline]
pub fn per_sample_smoothed_loss(margin: f64, gamma: f64, n: usize) -> f64 {
    let nf = n as f64;
    match Branch::of(margin, gamma, n) {
        Branch::Zero => 0.0,
        Branch::Linear => (1.0 - margin) / nf - gamma / 2.0,
        Branch::Quadratic => {
            let r = 1.0 - margin;
            r * r / (2.0 * gamma * nf * nf)
        }
    }
}

/// Hinge contribution `(1 - margin)_+ / n` of one sample.
#[inline]
pub fn per_sample_hinge(margin: f64, n: usize) -> f64 {
    (1.0 - margin).max(0.0) / n as f64
}

/// `mu` from precomputed margins.
pub fn mu_from_margins(margins: ArrayView1<'_, f64>, gamma: f64) -> MuVector {
    let n = margins.len();
    MuVector(margins.mapv(|m| mu_for(m, gamma, n)))
}

/// The closed-form inner maximizer at `beta`.
pub fn mu_update(beta: ArrayView1<'_, f64>, d: &Dataset, gamma: f64) -> MuVector {
    mu_from_margins(d.margins(beta).view(), gamma)
}

/// Everything known about the smoothed loss at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedLossReport {
    pub value: f64,
    pub per_sample: Array1<f64>,
    pub mu: MuVector,
    pub branch: Vec<Branch>,
}

impl SmoothedLossReport {
    pub fn from_margins(margins: ArrayView1<'_, f64>, gamma: f64) -> Self {
        let n = margins.len();
        let branch: Vec<Branch> = margins.iter().map(|&m| Branch::of(m, gamma, n)).collect();
        let per_sample = margins.mapv(|m| per_sample_smoothed_loss(m, gamma, n));
        let value = exact_sum(per_sample.iter().copied());
        SmoothedLossReport {
            value,
            per_sample,
            mu: mu_from_margins(margins, gamma),
            branch,
        }
    }
}

/// Total smoothed loss, correctly rounded.
pub fn smoothed_loss_value(margins: ArrayView1<'_, f64>, gamma: f64) -> f64 {
    let n = margins.len();
    exact_sum(margins.iter().map(|&m| per_sample_smoothed_loss(m, gamma, n)))
}

pub fn smoothed_loss(beta: ArrayView1<'_, f64>, d: &Dataset, gamma: f64) -> SmoothedLossReport {
    SmoothedLossReport::from_margins(d.margins(beta).view(), gamma)
}

/// Mean hinge loss `(1/n) sum (1 - y_i x_i . beta)_+`.
pub fn hinge_loss(beta: ArrayView1<'_, f64>, d: &Dataset) -> f64 {
    hinge_from_margins(d.margins(beta).view())
}

pub fn hinge_from_margins(margins: ArrayView1<'_, f64>) -> f64 {
    let n = margins.len();
    exact_sum(margins.iter().map(|&m| per_sample_hinge(m, n)))
}

/// `-(1/n) X^T (y * mu)` for a given `mu`.
pub fn gradient_from_mu(d: &Dataset, mu: &MuVector) -> Array1<f64> {
    let u = &d.y * &mu.0;
    let mut g = linalg::mat_t_vec(d.x.view(), u.view());
    let n = d.n() as f64;
    g.mapv_inplace(|v| -v / n);
    g
}

/// Gradient of the smoothed loss with respect to `beta`, evaluated at the
/// inner maximizer.
pub fn smoothed_gradient_beta(beta: ArrayView1<'_, f64>, d: &Dataset, gamma: f64) -> Array1<f64> {
    gradient_from_mu(d, &mu_update(beta, d, gamma))
}
