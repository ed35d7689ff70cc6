//! Likelihood approximation and Bayesian parameter learning for binary
//! pairwise grid Markov random fields.
//!
//! The central piece is the MLE-induced likelihood ([`mle_likelihood`]):
//! every edge parameter gets a one-dimensional coin-toss marginal likelihood
//! anchored at the maximum-likelihood estimate, and the marginals are tied
//! back together with an exchangeable Gaussian copula. The crate also ships
//! the exact likelihood for grids narrow enough for a transfer-window
//! recursion, pseudolikelihood and a quadratic (Laplace-style) surrogate,
//! four sampling-based partition-ratio estimators, and a Metropolis-Hastings
//! engine that accepts any of them as a pluggable ratio strategy.

pub mod baselines;
pub mod cli;
pub mod error;
pub mod exact;
pub mod math;
pub mod mh;
pub mod mle;
pub mod mle_likelihood;
pub mod model;

pub use error::{MrfError, Result};
pub use model::{Configuration, Dataset, GridSpec, SufficientStats, ThetaVector};
