// The guide lives in book/src as plain mdbook Markdown. mdbook cannot run Rust
// listings against a workspace crate, so each chapter is pulled in here as
// module docs and `cargo test --doc -p hadamard-svm-book` runs every listing.
// One module per chapter keeps failures traceable to their chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/smoothing.md")]
pub mod smoothing {}
#[doc = include_str!("../../../book/src/overparameterization.md")]
pub mod overparameterization {}
#[doc = include_str!("../../../book/src/baselines.md")]
pub mod baselines {}
#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}
#[doc = include_str!("../../../book/src/coherence.md")]
pub mod coherence {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
