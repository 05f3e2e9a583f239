//! Sparse linear support vector machines without an explicit penalty.
//!
//! The coefficient vector is written as `beta = w*w - v*v` and plain gradient
//! descent is run on a smoothed hinge loss, starting from a tiny uniform
//! `w = v = alpha`. Early-stopped iterates are sparse: coordinates without
//! signal stay on the order of `alpha`.
//!
//! The crate also carries the comparison estimators (an l1-penalized SVM
//! solved along a regularization path, and an oracle fit on the true
//! support), seeded synthetic generators, evaluation metrics including a
//! coherence audit of the design, and an experiment harness.
//!
//! ```
//! use hadamard_svm::{datagen, gd, metrics, GdConfig};
//!
//! let splits = datagen::generate(&datagen::GenSpec {
//!     n: 100,
//!     p: 50,
//!     ..datagen::GenSpec::reference(7)
//! })?;
//! let fit = gd::fit_gd(&splits.train, &splits.validation, &GdConfig::default())?;
//! let acc = metrics::accuracy(fit.beta_hat.view(), &splits.test);
//! assert!(acc > 0.8);
//! # Ok::<(), hadamard_svm::Error>(())
//! ```

pub mod baselines;
pub mod data;
pub mod datagen;
mod error;
pub mod gd;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod smoothing;

pub use data::{classify_signals, validate_dataset, Dataset, GroundTruth, SignalClasses};
pub use error::{Error, Result};
pub use model::{Checkpoint, FitResult, GdConfig, OverParamState, StopReason, Termination};
