//! Consensus formation in metric opinion spaces.
//!
//! The crate models opinions as points of a metric space, aggregates them
//! through Fréchet barycenters, and provides:
//!
//! * [`metric`] — the metric-space abstraction, weight vectors on the
//!   simplex, and the generic Fréchet function / variance / barycenter;
//! * [`spaces`] — Euclidean vectors, 1-D measures under the 2-Wasserstein
//!   metric (quantile representation, GEV family included), Gaussians under
//!   Bures-Wasserstein, and Gollier discount-rate curves;
//! * [`consensus`] — one-shot consensus-point solvers (minimal worst-case
//!   deviation and maximal joint acceptance probability);
//! * [`engine`] — the iterative two-stage consensus scheme with evolving
//!   interaction weights;
//! * [`clustering`] — metric k-means and the cluster-then-consense pipeline;
//! * [`sdr`] — the social-discount-rate application with GEV contingency
//!   valuation;
//! * [`config`], [`trace`], [`rng`], [`cli`] — scenario files, trace
//!   serialization, seeded substreams, and the command-line front end.
//!
//! The data-parallel inner loops run on rayon when the default `parallel`
//! feature is enabled and fall back to sequential iteration without it;
//! results are identical in both builds.

// Rational-approximation constants are kept at published precision, and
// `!(x > 0.0)` guards reject NaN on purpose where `x <= 0.0` would not.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod clustering;
pub mod config;
pub mod consensus;
pub mod engine;
pub mod error;
pub mod metric;
pub mod rng;
pub mod sdr;
pub mod spaces;
pub mod trace;
pub mod util;

pub use error::{Error, Result};
pub use metric::{
    frechet_barycenter, frechet_function, frechet_variance, MetricSpace, WeightVector,
};
