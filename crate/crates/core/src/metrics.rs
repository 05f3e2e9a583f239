//! Estimation, prediction and selection metrics, plus the coherence audit of
//! a design matrix.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GroundTruth};
use crate::error::{Error, Result};
use crate::linalg::{self, exact_sum};

/// `|| b/|b| - b*/|b*| ||`.
pub fn normalized_direction_error(beta_hat: ArrayView1<'_, f64>, beta_star: ArrayView1<'_, f64>) -> Result<f64> {
    check_len(beta_hat, beta_star)?;
    let a = linalg::norm2(beta_hat);
    let b = linalg::norm2(beta_star);
    if a == 0.0 {
        return Err(Error::InvalidArgument("estimate is identically zero".into()));
    }
    if b == 0.0 {
        return Err(Error::InvalidArgument("true coefficients are identically zero".into()));
    }
    Ok(exact_sum(beta_hat.iter().zip(beta_star.iter()).map(|(x, y)| {
        let d = x / a - y / b;
        d * d
    }))
    .sqrt())
}

/// `||b - b*|| / ||b*||`.
pub fn relative_error(beta_hat: ArrayView1<'_, f64>, beta_star: ArrayView1<'_, f64>) -> Result<f64> {
    check_len(beta_hat, beta_star)?;
    let b = linalg::norm2(beta_star);
    if b == 0.0 {
        return Err(Error::InvalidArgument("true coefficients are identically zero".into()));
    }
    let diff = exact_sum(beta_hat.iter().zip(beta_star.iter()).map(|(x, y)| (x - y) * (x - y)));
    Ok(diff.sqrt() / b)
}

fn check_len(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("vectors of length {} and {}", a.len(), b.len())));
    }
    Ok(())
}

/// Predicted label; a zero score counts as `+1`.
#[inline]
pub fn predict_label(score: f64) -> f64 {
    if score >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Number of samples whose predicted label differs from `y`.
pub fn misclassified(beta_hat: ArrayView1<'_, f64>, d: &Dataset) -> usize {
    linalg::mat_vec(d.x.view(), beta_hat)
        .iter()
        .zip(d.y.iter())
        .filter(|(&s, &y)| predict_label(s) != y)
        .count()
}

/// Fraction of samples with `sign(x . beta) = y`.
pub fn accuracy(beta_hat: ArrayView1<'_, f64>, d: &Dataset) -> f64 {
    1.0 - misclassified(beta_hat, d) as f64 / d.n() as f64
}

/// Variable-selection counts. `false_positive` counts null coordinates
/// estimated above `tau`; `true_negative` counts true signals estimated at or
/// below it (missed signals).
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub false_positive: usize,
    pub true_negative: usize,
    pub tau: f64,
}

pub fn selection_metrics(beta_hat: ArrayView1<'_, f64>, gt: &GroundTruth, tau: f64) -> Result<SelectionMetrics> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be >= 0, got {tau}")));
    }
    if beta_hat.len() != gt.p() {
        return Err(Error::Shape(format!("estimate has {} entries, truth has {}", beta_hat.len(), gt.p())));
    }
    let mut false_positive = 0;
    let mut true_negative = 0;
    for (b, &truth) in beta_hat.iter().zip(&gt.beta_star) {
        let detected = b.abs() > tau;
        if truth == 0.0 && detected {
            false_positive += 1;
        } else if truth != 0.0 && !detected {
            true_negative += 1;
        }
    }
    Ok(SelectionMetrics {
        false_positive,
        true_negative,
        tau,
    })
}

/// Detection threshold: `0` for estimators that produce exact zeros,
/// otherwise `1e-3 * ||beta_hat||_inf`.
pub fn selection_threshold(beta_hat: ArrayView1<'_, f64>, exact_zeros: bool) -> f64 {
    if exact_zeros {
        0.0
    } else {
        1e-3 * linalg::norm_inf(beta_hat)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub delta: f64,
    /// Zero-based column pair attaining `delta`; `None` when `p < 2`.
    pub argmax_pair: Option<(usize, usize)>,
    /// `1 / (s log p)`, when a sparsity level was supplied.
    pub budget: Option<f64>,
}

impl CoherenceReport {
    pub fn with_budget(mut self, s: usize, p: usize) -> Self {
        self.budget = Some(coherence_budget(s, p));
        self
    }
}

pub fn coherence_budget(s: usize, p: usize) -> f64 {
    1.0 / (s as f64 * (p as f64).ln())
}

fn normalize_columns(x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let mut out = x.to_owned();
    for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        let norm = linalg::norm2(col.view());
        if norm == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        col.mapv_inplace(|v| v / norm);
    }
    Ok(out)
}

fn pairwise_max(x: &Array2<f64>, pair_value: impl Fn(ArrayView1<'_, f64>, ArrayView1<'_, f64>) -> f64) -> CoherenceReport {
    let p = x.ncols();
    let mut delta = 0.0;
    let mut argmax_pair = None;
    for i in 0..p {
        for j in (i + 1)..p {
            let v = pair_value(x.column(i), x.column(j));
            if argmax_pair.is_none() || v > delta {
                delta = v;
                argmax_pair = Some((i, j));
            }
        }
    }
    CoherenceReport {
        delta,
        argmax_pair,
        budget: None,
    }
}

/// Coherence of the column-normalized design: the largest
/// `|<x_i 1_K, x_j 1_K>|` over column pairs and row subsets `K`.
///
/// For a fixed pair the best subset keeps either all positive products
/// `x_ki x_kj` or all negative ones, so each pair costs `O(n)`.
pub fn coherence(x: ArrayView2<'_, f64>) -> Result<CoherenceReport> {
    let xn = normalize_columns(x)?;
    Ok(pairwise_max(&xn, |a, b| {
        let products = a.iter().zip(b.iter()).map(|(u, v)| u * v);
        let pos = exact_sum(products.clone().filter(|&t| t > 0.0));
        let neg = exact_sum(products.filter(|&t| t < 0.0));
        pos.max(-neg)
    }))
}

pub const BRUTE_FORCE_MAX_ROWS: usize = 20;

/// Coherence by enumerating all `2^n` row subsets.
pub fn coherence_bruteforce(x: ArrayView2<'_, f64>) -> Result<CoherenceReport> {
    let n = x.nrows();
    if n > BRUTE_FORCE_MAX_ROWS {
        return Err(Error::TooManyRows {
            n,
            max: BRUTE_FORCE_MAX_ROWS,
        });
    }
    let xn = normalize_columns(x)?;
    Ok(pairwise_max(&xn, |a, b| {
        let products: Vec<f64> = a.iter().zip(b.iter()).map(|(u, v)| u * v).collect();
        (0u32..(1u32 << n))
            .map(|mask| {
                exact_sum((0..n).filter(|k| mask & (1 << k) != 0).map(|k| products[k])).abs()
            })
            .fold(0.0, f64::max)
    }))
}
