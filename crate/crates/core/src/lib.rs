//! Limit sets of light-tailed multivariate sample clouds.
//!
//! A limit set `G = {x >= 0 : g(x) <= 1}` is described by a 1-homogeneous
//! gauge function `g`. This crate evaluates a catalog of gauge functions,
//! minimizes them over boundary regions to obtain extremal-dependence
//! summaries (`lambda(omega)`, `eta_C`, `tau_C(delta)`, conditional-extremes
//! exponents `alpha`, `beta`), simulates sample clouds from matching models
//! and estimates the same summaries empirically.
//!
//! Data-parallel loops (sampling chunks, bootstrap replicates, summary grids,
//! Hausdorff queries) run on rayon when the `parallel` feature is enabled and
//! fall back to sequential iteration otherwise; see [`Exec`].

// negated float comparisons are deliberate: they route NaN to the failure arm
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod estimation;
pub mod exec;
pub mod gauge;
pub mod geometry;
pub mod measures;
pub mod mixtures;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Exec;
pub use gauge::{ExtendedValue, Gauge, GaugeSpec};
pub use geometry::{BoundaryRegion, Face, MinResult, SearchOptions};
pub use measures::DependenceSummary;
pub use sampling::{Margins, ModelFamily, ModelSpec, SampleCloud};
