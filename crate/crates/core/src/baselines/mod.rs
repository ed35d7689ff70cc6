//! Baseline likelihood surrogates and partition-ratio estimators.

pub mod likelihood;
pub mod sampling;

pub use likelihood::{
    fit_laplace, fit_laplace_with, log_laplace_likelihood, log_pseudolikelihood, LaplaceModel,
    MomentSource, PseudoLikelihood, DEFAULT_LAPLACE_SAMPLES,
};
pub use sampling::{
    estimate_log_ratio_auxvar, estimate_log_ratio_exchange, estimate_log_ratio_is_geometric,
    make_pool, persistent_step, ParticlePool,
};
