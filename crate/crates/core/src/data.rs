//! Datasets, ground truth and the signal-strength classes.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labelled design: `x` is `n x p` with one sample per row, `y` holds the
/// labels coded as `-1.0` / `+1.0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
}

impl Dataset {
    /// Builds a dataset and checks every invariant.
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let d = Dataset { x, y };
        d.validate()?;
        Ok(d)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Reports the first violated invariant.
    pub fn validate(&self) -> Result<()> {
        let (n, p) = self.x.dim();
        if n == 0 || p == 0 {
            return Err(Error::Shape(format!("need n >= 1 and p >= 1, got {n} x {p}")));
        }
        if self.y.len() != n {
            return Err(Error::Shape(format!(
                "X has {n} rows but y has {} labels",
                self.y.len()
            )));
        }
        if let Some((index, &value)) = self
            .y
            .iter()
            .enumerate()
            .find(|(_, &v)| v != 1.0 && v != -1.0)
        {
            return Err(Error::BadLabel { index, value });
        }
        if let Some(((row, col), _)) = self.x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(())
    }

    /// Margins `y_k * x_k . beta` for every sample.
    pub fn margins(&self, beta: ArrayView1<'_, f64>) -> Array1<f64> {
        let mut m = crate::linalg::mat_vec(self.x.view(), beta);
        m *= &self.y;
        m
    }

    /// Reorders columns so that new column `j` is old column `perm[j]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Dataset> {
        check_permutation(perm, self.p())?;
        let x = self.x.select(ndarray::Axis(1), perm);
        Ok(Dataset {
            x,
            y: self.y.clone(),
        })
    }

    /// Writes `y,x1,...,xp` CSV. Values use the shortest representation that
    /// parses back to the same `f64`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut header = String::from("y");
        for j in 1..=self.p() {
            header.push_str(&format!(",x{j}"));
        }
        writeln!(w, "{header}").map_err(|e| Error::io(path, e))?;
        for (row, &label) in self.x.rows().into_iter().zip(self.y.iter()) {
            let mut line = if label > 0.0 { String::from("1") } else { String::from("-1") };
            for v in row {
                line.push(',');
                line.push_str(&format!("{v:?}"));
            }
            writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(BufReader::new(file));
        let headers = rdr.headers().map_err(|e| Error::parse(path, e))?.clone();
        if headers.get(0) != Some("y") || headers.len() < 2 {
            return Err(Error::parse(path, "expected header `y,x1,...,xp`"));
        }
        let p = headers.len() - 1;
        let mut ys = Vec::new();
        let mut xs = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::parse(path, e))?;
            if record.len() != p + 1 {
                return Err(Error::parse(
                    path,
                    format!("row {} has {} fields, expected {}", line + 1, record.len(), p + 1),
                ));
            }
            for (k, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::parse(path, format!("row {}: cannot parse `{field}`", line + 1))
                })?;
                if k == 0 {
                    ys.push(v);
                } else {
                    xs.push(v);
                }
            }
        }
        let n = ys.len();
        let x = Array2::from_shape_vec((n, p), xs).map_err(|e| Error::parse(path, e))?;
        Dataset::new(x, Array1::from(ys))
    }
}

pub(crate) fn check_permutation(perm: &[usize], p: usize) -> Result<()> {
    let mut seen = vec![false; p];
    if perm.len() != p {
        return Err(Error::InvalidArgument(format!(
            "permutation has length {}, expected {p}",
            perm.len()
        )));
    }
    for &j in perm {
        if j >= p || std::mem::replace(&mut seen[j], true) {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
    }
    Ok(())
}

/// Free-function form of [`Dataset::validate`].
pub fn validate_dataset(d: &Dataset) -> Result<()> {
    d.validate()
}

/// True coefficients of a synthetic problem. `support` is zero-based and
/// sorted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub beta_star: Vec<f64>,
    pub support: Vec<usize>,
}

impl GroundTruth {
    pub fn from_beta(beta_star: Vec<f64>) -> Self {
        let support = beta_star
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(i, _)| i)
            .collect();
        GroundTruth { beta_star, support }
    }

    pub fn s(&self) -> usize {
        self.support.len()
    }

    pub fn p(&self) -> usize {
        self.beta_star.len()
    }

    pub fn beta(&self) -> Array1<f64> {
        Array1::from(self.beta_star.clone())
    }

    pub fn validate(&self) -> Result<()> {
        let expected: Vec<usize> = GroundTruth::from_beta(self.beta_star.clone()).support;
        if expected != self.support {
            return Err(Error::InvalidArgument(
                "support does not match the nonzero pattern of beta_star".into(),
            ));
        }
        Ok(())
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), self).map_err(|e| Error::parse(path, e))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let gt: GroundTruth =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::parse(path, e))?;
        gt.validate().map_err(|e| Error::parse(path, e))?;
        Ok(gt)
    }
}

/// Strong and weak signal index sets, with the minimal strong magnitude and
/// the strong-signal condition number.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalClasses {
    pub strong: BTreeSet<usize>,
    pub weak: BTreeSet<usize>,
    /// `min |beta*_i|` over the strong set; `None` when it is empty.
    pub m_min: Option<f64>,
    /// Largest over smallest strong magnitude; `None` when the strong set is empty.
    pub kappa: Option<f64>,
    pub strong_threshold: f64,
    pub weak_threshold: f64,
}

impl SignalClasses {
    pub fn s1(&self) -> usize {
        self.strong.len()
    }

    pub fn s2(&self) -> usize {
        self.weak.len()
    }
}

/// Splits the support into strong (`|b| >= log p * sqrt(log p / n)`) and
/// weak (`|b| <= sqrt(log p / n)`) coordinates. Both constants are 1.
pub fn classify_signals(gt: &GroundTruth, n: usize, p: usize) -> Result<SignalClasses> {
    if n < 2 || p < 2 {
        return Err(Error::InvalidArgument(format!(
            "signal classes need n >= 2 and p >= 2, got n = {n}, p = {p}"
        )));
    }
    if gt.p() != p {
        return Err(Error::Shape(format!("beta_star has length {}, expected {p}", gt.p())));
    }
    let log_p = (p as f64).ln();
    let weak_threshold = (log_p / n as f64).sqrt();
    let strong_threshold = log_p * weak_threshold;

    let mut strong = BTreeSet::new();
    let mut weak = BTreeSet::new();
    for &i in &gt.support {
        let magnitude = gt.beta_star[i].abs();
        if magnitude >= strong_threshold {
            strong.insert(i);
        } else if magnitude <= weak_threshold {
            weak.insert(i);
        } else {
            return Err(Error::UnclassifiedSignal {
                index: i,
                magnitude,
                weak: weak_threshold,
                strong: strong_threshold,
            });
        }
    }
    let magnitudes = strong.iter().map(|&i| gt.beta_star[i].abs());
    let m_min = magnitudes.clone().reduce(f64::min);
    let kappa = magnitudes.reduce(f64::max).zip(m_min).map(|(hi, lo)| hi / lo);
    Ok(SignalClasses {
        strong,
        weak,
        m_min,
        kappa,
        strong_threshold,
        weak_threshold,
    })
}
