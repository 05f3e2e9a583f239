//! Seeded synthetic problems.
//!
//! Every generator draws `3n` samples sequentially from one ChaCha8 stream
//! seeded with `spec.seed`; samples `0..n` form the training split,
//! `n..2n` validation and `2n..3n` test.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GroundTruth};
use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Logistic labels on i.i.d. covariates with `beta* = m 1_S`.
    DefaultLogistic,
    /// AR(1) Gaussian covariates with probit labels.
    Model1Probit,
    /// Balanced Gaussian class mixture.
    Model2Mixture,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateDist {
    Gaussian,
    UniformPm1,
    StudentT3,
}

/// The five four-signal layouts used in the structure experiments.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Structure {
    A,
    B,
    C,
    D,
    E,
}

impl Structure {
    pub const ALL: [Structure; 5] = [Structure::A, Structure::B, Structure::C, Structure::D, Structure::E];

    /// Signal positions, one-based.
    pub fn one_based(self) -> [usize; 4] {
        match self {
            Structure::A => [5, 6, 7, 8],
            Structure::B => [4, 6, 8, 9],
            Structure::C => [3, 6, 9, 10],
            Structure::D => [2, 6, 10, 11],
            Structure::E => [1, 6, 11, 12],
        }
    }

    pub fn support(self) -> Vec<usize> {
        self.one_based().iter().map(|i| i - 1).collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Structure::A => "A",
            Structure::B => "B",
            Structure::C => "C",
            Structure::D => "D",
            Structure::E => "E",
        }
    }

    pub fn parse(s: &str) -> Option<Structure> {
        Structure::ALL.into_iter().find(|st| st.name().eq_ignore_ascii_case(s))
    }
}

/// Where the true signal lives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    /// `beta*_i = m` on the given zero-based support.
    Uniform { m: f64, support: Vec<usize> },
    Explicit(Vec<f64>),
}

impl Signal {
    /// `m` on the first `s` coordinates.
    pub fn leading(m: f64, s: usize) -> Signal {
        Signal::Uniform {
            m,
            support: (0..s).collect(),
        }
    }

    pub fn structure(m: f64, st: Structure) -> Signal {
        Signal::Uniform { m, support: st.support() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub scheme: Scheme,
    pub n: usize,
    pub p: usize,
    /// Ignored by the two fixed models, which set their own `beta*`.
    pub signal: Signal,
    /// Ignored by the two fixed models (always Gaussian).
    pub covariate_dist: CovariateDist,
    pub seed: u64,
}

impl GenSpec {
    /// `n = 200`, `p = 400`, `m = 10` on the first four coordinates, Gaussian covariates.
    pub fn reference(seed: u64) -> GenSpec {
        GenSpec {
            scheme: Scheme::DefaultLogistic,
            n: 200,
            p: 400,
            signal: Signal::leading(10.0, 4),
            covariate_dist: CovariateDist::Gaussian,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidConfig(format!("need n, p >= 1, got n = {}, p = {}", self.n, self.p)));
        }
        match self.scheme {
            Scheme::DefaultLogistic => match &self.signal {
                Signal::Uniform { m, support } => {
                    if !m.is_finite() {
                        return Err(Error::InvalidConfig(format!("signal strength {m} is not finite")));
                    }
                    let mut seen = vec![false; self.p];
                    for &i in support {
                        if i >= self.p {
                            return Err(Error::InvalidConfig(format!("support index {i} out of range for p = {}", self.p)));
                        }
                        if std::mem::replace(&mut seen[i], true) {
                            return Err(Error::InvalidConfig(format!("support index {i} repeated")));
                        }
                    }
                }
                Signal::Explicit(beta) => {
                    if beta.len() != self.p {
                        return Err(Error::InvalidConfig(format!("explicit beta* has {} entries, p = {}", beta.len(), self.p)));
                    }
                    if beta.iter().any(|b| !b.is_finite()) {
                        return Err(Error::InvalidConfig("explicit beta* is not finite".into()));
                    }
                }
            },
            Scheme::Model1Probit if self.p < 4 => {
                return Err(Error::InvalidConfig("model 1 needs p >= 4".into()));
            }
            Scheme::Model2Mixture if self.p < 5 => {
                return Err(Error::InvalidConfig("model 2 needs p >= 5".into()));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn beta_star(&self) -> Vec<f64> {
        match self.scheme {
            Scheme::DefaultLogistic => match &self.signal {
                Signal::Uniform { m, support } => {
                    let mut b = vec![0.0; self.p];
                    for &i in support {
                        b[i] = *m;
                    }
                    b
                }
                Signal::Explicit(b) => b.clone(),
            },
            Scheme::Model1Probit => {
                let mut b = vec![0.0; self.p];
                b[..4].fill(MODEL1_SIGNAL);
                b
            }
            Scheme::Model2Mixture => {
                let mut b = vec![0.0; self.p];
                b[..5].copy_from_slice(&MODEL2_BAYES_DIRECTION);
                b
            }
        }
    }
}

/// The three splits and the truth they were drawn from.
#[derive(Clone, Debug, PartialEq)]
pub struct Splits {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub truth: GroundTruth,
}

pub const MODEL1_SIGNAL: f64 = 1.1;
pub const MODEL1_RHO: f64 = 0.4;
pub const MODEL2_MEAN: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];
pub const MODEL2_CORRELATION: f64 = -0.2;
/// Bayes rule direction of model 2, as published (proportional to `Sigma^-1 mu`
/// to two decimals).
pub const MODEL2_BAYES_DIRECTION: [f64; 5] = [1.39, 1.47, 1.56, 1.65, 1.74];

/// Dispatches on `spec.scheme`.
pub fn generate(spec: &GenSpec) -> Result<Splits> {
    match spec.scheme {
        Scheme::DefaultLogistic => gen_default(spec),
        Scheme::Model1Probit => gen_model1(spec.n, spec.p, spec.seed),
        Scheme::Model2Mixture => gen_model2(spec.n, spec.p, spec.seed),
    }
}

/// Logistic labels: `P(y = +1 | x) = 1 / (1 + exp(-x . beta*))`.
pub fn gen_default(spec: &GenSpec) -> Result<Splits> {
    if spec.scheme != Scheme::DefaultLogistic {
        return Err(Error::InvalidConfig("gen_default needs the default_logistic scheme".into()));
    }
    spec.validate()?;
    let beta = spec.beta_star();
    let nonzero: Vec<usize> = (0..spec.p).filter(|&i| beta[i] != 0.0).collect();
    let dist = spec.covariate_dist;
    let t3 = StudentT::new(3.0).expect("valid dof");
    let unif = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
    let splits = sample_splits(spec.n, spec.p, spec.seed, |rng, row| {
        for v in row.iter_mut() {
            *v = match dist {
                CovariateDist::Gaussian => rng.sample(StandardNormal),
                CovariateDist::UniformPm1 => unif.sample(rng),
                CovariateDist::StudentT3 => t3.sample(rng),
            };
        }
        let score: f64 = nonzero.iter().map(|&i| row[i] * beta[i]).sum();
        let prob = logistic(score);
        if rng.random::<f64>() < prob {
            1.0
        } else {
            -1.0
        }
    });
    finish(splits, beta)
}

/// AR(1) Gaussian covariates (`corr(x_i, x_j) = 0.4^|i-j|`) with probit
/// labels `P(y = +1 | x) = Phi(x . beta*)`, `beta* = (1.1, 1.1, 1.1, 1.1, 0, ...)`.
pub fn gen_model1(n: usize, p: usize, seed: u64) -> Result<Splits> {
    let spec = GenSpec {
        scheme: Scheme::Model1Probit,
        n,
        p,
        signal: Signal::Explicit(vec![]),
        covariate_dist: CovariateDist::Gaussian,
        seed,
    };
    spec.validate()?;
    let beta = spec.beta_star();
    let innovation = (1.0 - MODEL1_RHO * MODEL1_RHO).sqrt();
    let splits = sample_splits(n, p, seed, |rng, row| {
        let mut prev: f64 = rng.sample(StandardNormal);
        row[0] = prev;
        for v in row.iter_mut().skip(1) {
            let z: f64 = rng.sample(StandardNormal);
            prev = MODEL1_RHO * prev + innovation * z;
            *v = prev;
        }
        let score: f64 = (0..4).map(|i| row[i] * MODEL1_SIGNAL).sum();
        if rng.random::<f64>() < std_normal_cdf(score) {
            1.0
        } else {
            -1.0
        }
    });
    finish(splits, beta)
}

/// Balanced classes with `x | y ~ N(y mu, Sigma)`, where `mu` and the
/// `-0.2` equicorrelation live on the first five coordinates.
pub fn gen_model2(n: usize, p: usize, seed: u64) -> Result<Splits> {
    let spec = GenSpec {
        scheme: Scheme::Model2Mixture,
        n,
        p,
        signal: Signal::Explicit(vec![]),
        covariate_dist: CovariateDist::Gaussian,
        seed,
    };
    spec.validate()?;
    let chol = model2_cholesky();
    let splits = sample_splits(n, p, seed, |rng, row| {
        let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
        for v in row.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let mut head = [0.0; 5];
        for (i, h) in head.iter_mut().enumerate() {
            *h = y * MODEL2_MEAN[i] + (0..=i).map(|k| chol[i][k] * row[k]).sum::<f64>();
        }
        row.as_slice_mut().expect("contiguous row")[..5].copy_from_slice(&head);
        y
    });
    finish(splits, spec.beta_star())
}

/// Lower Cholesky factor of the 5x5 model-2 covariance.
fn model2_cholesky() -> [[f64; 5]; 5] {
    let sigma = |i: usize, j: usize| if i == j { 1.0 } else { MODEL2_CORRELATION };
    let mut l = [[0.0; 5]; 5];
    for i in 0..5 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            l[i][j] = if i == j {
                (sigma(i, i) - s).sqrt()
            } else {
                (sigma(i, j) - s) / l[j][j]
            };
        }
    }
    l
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

type Draw<'a> = ndarray::ArrayViewMut1<'a, f64>;

fn sample_splits<F>(n: usize, p: usize, seed: u64, mut draw: F) -> [Dataset; 3]
where
    F: FnMut(&mut ChaCha8Rng, &mut Draw<'_>) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut one = || {
        let mut x = Array2::zeros((n, p));
        let mut y = Array1::zeros(n);
        for (mut row, label) in x.rows_mut().into_iter().zip(y.iter_mut()) {
            *label = draw(&mut rng, &mut row);
        }
        Dataset { x, y }
    };
    let train = one();
    let validation = one();
    let test = one();
    [train, validation, test]
}

fn finish(splits: [Dataset; 3], beta: Vec<f64>) -> Result<Splits> {
    let [train, validation, test] = splits;
    for d in [&train, &validation, &test] {
        d.validate()?;
    }
    Ok(Splits {
        train,
        validation,
        test,
        truth: GroundTruth::from_beta(beta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> GenSpec {
        GenSpec {
            n: 50,
            p: 20,
            ..GenSpec::reference(seed)
        }
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate(&small(3)).unwrap();
        let b = generate(&small(3)).unwrap();
        assert_eq!(a, b);
        let c = generate(&small(4)).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn splits_are_consecutive_stream_segments() {
        let spec = small(9);
        let three = generate(&spec).unwrap();
        let long = generate(&GenSpec { n: 150, ..spec }).unwrap();
        assert_eq!(long.train.x.slice(ndarray::s![0..50, ..]), three.train.x);
        assert_eq!(long.train.x.slice(ndarray::s![50..100, ..]), three.validation.x);
        assert_eq!(long.train.x.slice(ndarray::s![100..150, ..]), three.test.x);
    }

    #[test]
    fn structure_supports_are_one_based_as_published() {
        let s = generate(&GenSpec {
            signal: Signal::structure(10.0, Structure::E),
            ..small(1)
        })
        .unwrap();
        let one_based: Vec<usize> = s.truth.support.iter().map(|i| i + 1).collect();
        assert_eq!(one_based, vec![1, 6, 11, 12]);
        assert_eq!(Structure::parse("c"), Some(Structure::C));
    }

    #[test]
    fn uniform_covariates_are_bounded() {
        let s = generate(&GenSpec {
            covariate_dist: CovariateDist::UniformPm1,
            ..small(2)
        })
        .unwrap();
        for d in [&s.train, &s.validation, &s.test] {
            assert!(d.x.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn invalid_specs() {
        let bad_support = GenSpec {
            signal: Signal::Uniform { m: 1.0, support: vec![0, 0] },
            ..small(0)
        };
        assert!(generate(&bad_support).is_err());
        let out_of_range = GenSpec {
            signal: Signal::Uniform { m: 1.0, support: vec![20] },
            ..small(0)
        };
        assert!(generate(&out_of_range).is_err());
        assert!(gen_model1(10, 3, 0).is_err());
        assert!(gen_model2(10, 4, 0).is_err());
        let wrong_scheme = GenSpec { scheme: Scheme::Model1Probit, ..small(0) };
        assert!(gen_default(&wrong_scheme).is_err());
    }

    #[test]
    fn model_truths() {
        let s = gen_model1(10, 8, 0).unwrap();
        assert_eq!(s.truth.beta_star, vec![1.1, 1.1, 1.1, 1.1, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.truth.support, vec![0, 1, 2, 3]);
        let s = gen_model2(10, 6, 0).unwrap();
        assert_eq!(&s.truth.beta_star[..5], &MODEL2_BAYES_DIRECTION);
        assert_eq!(s.truth.s(), 5);
    }

    #[test]
    fn cholesky_reproduces_covariance() {
        let l = model2_cholesky();
        for i in 0..5 {
            for j in 0..5 {
                let v: f64 = (0..5).map(|k| l[i][k] * l[j][k]).sum();
                let expected = if i == j { 1.0 } else { -0.2 };
                assert!((v - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn probit_cdf_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
        assert!((logistic(0.3) + logistic(-0.3) - 1.0).abs() < 1e-15);
    }
}
