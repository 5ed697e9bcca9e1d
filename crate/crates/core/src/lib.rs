//! Top-K ranking from pairwise comparisons under the Bradley-Terry-Luce model.
//!
//! Two estimators are provided: Rank Centrality ([`spectral`]), which ranks by
//! the stationary distribution of a comparison Markov chain, and the
//! regularized maximum-likelihood estimator ([`mle`]). [`metrics`] and
//! [`theory`] supply the error measures and checkable bounds, and [`harness`]
//! runs seeded Monte-Carlo sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod metrics;
pub mod mle;
pub mod model;
pub mod ranking;
pub mod seed;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};
pub use model::{ComparisonData, ComparisonGraph, ScoreVector};
pub use ranking::{EstimateScale, RankingResult};
pub use seed::Seed;
