use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ratio_based_log_mh, RatioStrategy};
use crate::baselines::sampling::persistent_step_from;
use crate::baselines::{
    estimate_log_ratio_auxvar, estimate_log_ratio_exchange, estimate_log_ratio_is_geometric, make_pool,
    LaplaceModel, ParticlePool, PseudoLikelihood,
};
use crate::error::{check_len, Result};
use crate::exact::recursive_log_z;
use crate::mle_likelihood::MleLikelihoodModel;
use crate::model::{GridSpec, SufficientStats, ThetaVector};

/// A (possibly approximate) log-likelihood of the whole dataset.
pub trait LogLikelihood {
    fn log_likelihood(&mut self, theta: &[f64]) -> f64;
}

impl LogLikelihood for MleLikelihoodModel {
    fn log_likelihood(&mut self, theta: &[f64]) -> f64 {
        self.eval(theta)
    }
}

impl LogLikelihood for PseudoLikelihood {
    fn log_likelihood(&mut self, theta: &[f64]) -> f64 {
        self.eval(theta)
    }
}

/// Exact log-likelihood through the transfer-window recursion.
#[derive(Debug, Clone)]
pub struct ExactLikelihood {
    stats: SufficientStats,
    grid: GridSpec,
}

impl ExactLikelihood {
    pub fn new(stats: SufficientStats, grid: GridSpec) -> Result<Self> {
        check_len(grid.num_edges(), stats.agree.len())?;
        // surface the window guard at construction time
        recursive_log_z(&ThetaVector::uniform(grid.num_edges(), 0.5)?, &grid)?;
        Ok(Self { stats, grid })
    }
}

impl LogLikelihood for ExactLikelihood {
    fn log_likelihood(&mut self, theta: &[f64]) -> f64 {
        let log_z = crate::exact::TransferWindow::new(&self.grid).log_z(theta);
        self.stats.unnormalized_log_likelihood(theta) - self.stats.n as f64 * log_z
    }
}

/// Quadratic surrogate bound to one dataset's statistics.
#[derive(Debug, Clone)]
pub struct LaplaceLikelihood {
    model: LaplaceModel,
    s_bar: Vec<f64>,
    n: f64,
    at_mode: f64,
}

impl LaplaceLikelihood {
    pub fn new(model: LaplaceModel, stats: &SufficientStats) -> Result<Self> {
        check_len(model.num_params(), stats.agree.len())?;
        let at_mode = model.log_l_at_mode(stats);
        Ok(Self {
            s_bar: stats.mean(),
            n: stats.n as f64,
            at_mode,
            model,
        })
    }
}

impl LogLikelihood for LaplaceLikelihood {
    fn log_likelihood(&mut self, theta: &[f64]) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        self.model.eval(theta, &self.s_bar, self.n, self.at_mode)
    }
}

/// Likelihood-difference strategy that remembers the current state's value.
#[derive(Debug, Clone)]
pub struct LikelihoodStrategy<L> {
    name: String,
    likelihood: L,
    current: Option<f64>,
    proposed: f64,
}

impl<L: LogLikelihood> LikelihoodStrategy<L> {
    pub fn new(name: impl Into<String>, likelihood: L) -> Self {
        Self {
            name: name.into(),
            likelihood,
            current: None,
            proposed: f64::NAN,
        }
    }

    pub fn likelihood(&self) -> &L {
        &self.likelihood
    }
}

impl<L: LogLikelihood> RatioStrategy for LikelihoodStrategy<L> {
    fn name(&self) -> &str {
        &self.name
    }

    fn log_ratio(&mut self, current: &[f64], proposed: &[f64]) -> f64 {
        let cur = match self.current {
            Some(v) => v,
            None => {
                let v = self.likelihood.log_likelihood(current);
                self.current = Some(v);
                v
            }
        };
        self.proposed = self.likelihood.log_likelihood(proposed);
        self.proposed - cur
    }

    fn accept(&mut self, accepted: bool) {
        if accepted {
            self.current = Some(self.proposed);
        }
    }
}

/// Particle budget shared by the sampling-based strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParticleSettings {
    pub count: usize,
    pub advance_sweeps: usize,
    /// Sweeps per MH step for the persistent pool.
    pub k: usize,
}

impl Default for ParticleSettings {
    fn default() -> Self {
        Self {
            count: 1000,
            advance_sweeps: 1000,
            k: 1,
        }
    }
}

/// How `SamplingStrategy` estimates `log Z(theta) - log Z(theta*)`.
#[derive(Debug, Clone)]
pub enum RatioEstimator {
    IsGeometric,
    AuxVar { theta_hat: ThetaVector },
    Exchange,
    Persistent,
    /// The exact ratio from the recursion; a reference for the others.
    Exact,
}

/// Ratio-based strategy: data term plus `n` times an estimated log
/// partition ratio.
///
/// Pools are drawn fresh every step, at the proposal and, for the
/// importance-sampling and auxiliary-variable estimators, at the current
/// state too. Reusing the current state's pool would make those chains
/// stick wherever its estimate happened to be favourable, since the noise
/// is multiplied by `n`. The persistent pool is advanced under every
/// proposal and kept whether or not the move is accepted.
#[derive(Debug, Clone)]
pub struct SamplingStrategy {
    name: String,
    stats: SufficientStats,
    grid: GridSpec,
    estimator: RatioEstimator,
    settings: ParticleSettings,
    rng: ChaCha8Rng,
    persistent_pool: Option<ParticlePool>,
}

impl SamplingStrategy {
    pub fn new(
        name: impl Into<String>,
        stats: SufficientStats,
        grid: GridSpec,
        estimator: RatioEstimator,
        settings: ParticleSettings,
        seed: u64,
    ) -> Result<Self> {
        check_len(grid.num_edges(), stats.agree.len())?;
        if let RatioEstimator::AuxVar { theta_hat } = &estimator {
            check_len(grid.num_edges(), theta_hat.len())?;
        }
        if matches!(estimator, RatioEstimator::Exact) {
            recursive_log_z(&ThetaVector::uniform(grid.num_edges(), 0.5)?, &grid)?;
        }
        Ok(Self {
            name: name.into(),
            stats,
            grid,
            estimator,
            settings,
            rng: ChaCha8Rng::seed_from_u64(seed),
            persistent_pool: None,
        })
    }

    fn pool_at(&mut self, theta: &ThetaVector) -> Result<ParticlePool> {
        make_pool(theta, &self.grid, self.settings.count, self.settings.advance_sweeps, &mut self.rng)
    }

    fn estimate(&mut self, current: &[f64], proposed: &[f64]) -> Result<f64> {
        let theta = ThetaVector::new(current.to_vec())?;
        let star = ThetaVector::new(proposed.to_vec())?;
        match self.estimator.clone() {
            RatioEstimator::Exact => {
                Ok(recursive_log_z(&theta, &self.grid)? - recursive_log_z(&star, &self.grid)?)
            }
            RatioEstimator::Exchange => {
                let pool = self.pool_at(&star)?;
                estimate_log_ratio_exchange(&theta, &star, &pool, &self.grid)
            }
            RatioEstimator::IsGeometric => {
                let current_pool = self.pool_at(&theta)?;
                let pool = self.pool_at(&star)?;
                estimate_log_ratio_is_geometric(&theta, &star, &current_pool, &pool, &self.grid)
            }
            RatioEstimator::AuxVar { theta_hat } => {
                let current_pool = self.pool_at(&theta)?;
                let pool = self.pool_at(&star)?;
                estimate_log_ratio_auxvar(&theta, &star, &theta_hat, &current_pool, &pool, &self.grid)
            }
            RatioEstimator::Persistent => {
                if self.persistent_pool.is_none() {
                    self.persistent_pool = Some(self.pool_at(&theta)?);
                }
                let pool = self.persistent_pool.as_mut().expect("pool was just created");
                persistent_step_from(pool, &theta, &star, self.settings.k, &self.grid, &mut self.rng)
            }
        }
    }
}

impl RatioStrategy for SamplingStrategy {
    fn name(&self) -> &str {
        &self.name
    }

    fn log_ratio(&mut self, current: &[f64], proposed: &[f64]) -> f64 {
        match self.estimate(current, proposed) {
            Ok(log_r) => ratio_based_log_mh(&self.stats, current, proposed, log_r),
            Err(_) => f64::NAN,
        }
    }

    fn accept(&mut self, _accepted: bool) {}
}
