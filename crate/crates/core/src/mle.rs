//! Maximum-likelihood estimation of the edge parameters by (persistent)
//! contrastive divergence.
//!
//! The ascent runs on the natural parameters `w = logit(theta)`, where the
//! log-likelihood is concave and its gradient is the difference between the
//! data and model means of the agreement statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, MrfError, Result};
use crate::math::{logit, sigmoid};
use crate::model::{sufficient_stats, Configuration, Dataset, GridSpec, SiteSampler, SufficientStats, ThetaVector};

/// `theta_hat` is kept inside `[EPS, 1 - EPS]`.
pub const THETA_CLAMP: f64 = 1e-6;

const GRAD_EMA_DECAY: f64 = 0.9;
const MIN_ITERS_BEFORE_STOP: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct CdConfig {
    /// Gibbs sweeps per gradient step.
    pub k: usize,
    /// Initial learning rate; iteration `t` uses `step_size / sqrt(t)`.
    pub step_size: f64,
    pub max_iters: usize,
    pub num_particles: usize,
    pub persistent: bool,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for CdConfig {
    fn default() -> Self {
        Self {
            k: 1,
            step_size: 0.2,
            max_iters: 2000,
            num_particles: 100,
            persistent: true,
            grad_tol: 1e-3,
            seed: 0,
        }
    }
}

impl CdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.max_iters == 0 || self.num_particles == 0 {
            return Err(MrfError::Domain(
                "k, max_iters and num_particles must be positive".into(),
            ));
        }
        if !(self.step_size > 0.0) || !(self.grad_tol > 0.0) {
            return Err(MrfError::Domain(
                "step_size and grad_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    pub theta_hat: ThetaVector,
    /// Norm of the moving-average gradient at exit.
    pub grad_norm: f64,
    pub iters_used: usize,
    pub converged: bool,
}

/// `alpha_j / n - mean_particles(s_j)`: the log-likelihood ascent direction
/// in `w` coordinates (per observation).
pub fn cd_gradient(
    stats: &SufficientStats,
    particles: &[Configuration],
    theta: &ThetaVector,
    grid: &GridSpec,
) -> Result<Vec<f64>> {
    check_len(grid.num_edges(), theta.len())?;
    check_len(grid.num_edges(), stats.agree.len())?;
    if particles.is_empty() {
        return Err(MrfError::Empty("particle set"));
    }
    for x in particles {
        check_len(grid.num_nodes(), x.len())?;
    }
    Ok(gradient(&stats.mean(), particles, grid))
}

fn gradient(data_mean: &[f64], particles: &[Configuration], grid: &GridSpec) -> Vec<f64> {
    let mut counts = vec![0usize; grid.num_edges()];
    for x in particles {
        for (c, a) in counts.iter_mut().zip(grid.agreements(x.bits())) {
            *c += a as usize;
        }
    }
    let s = particles.len() as f64;
    data_mean
        .iter()
        .zip(counts)
        .map(|(m, c)| m - c as f64 / s)
        .collect()
}

/// Fit `theta` by stochastic gradient ascent with CD-k or persistent CD.
///
/// Edges whose endpoints agree in every observation (or in none) have their
/// MLE on the boundary; they are pinned to `1 - EPS` (or `EPS`) and excluded
/// from the ascent. The remaining coordinates start from the logit of the
/// empirical agreement rate. Persistent particles start at the data points.
pub fn fit_mle(data: &Dataset, grid: &GridSpec, cfg: &CdConfig) -> Result<MleResult> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(MrfError::Empty("dataset"));
    }
    let stats = sufficient_stats(data, grid)?;
    let n = stats.n;
    let data_mean = stats.mean();
    let w_lo = logit(THETA_CLAMP);
    let w_hi = logit(1.0 - THETA_CLAMP);

    let pinned: Vec<bool> = stats.agree.iter().map(|&a| a == 0 || a == n).collect();
    let mut w: Vec<f64> = stats
        .agree
        .iter()
        .zip(&data_mean)
        .map(|(&a, &m)| match a {
            0 => w_lo,
            a if a == n => w_hi,
            _ => logit(m),
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut particles: Vec<Configuration> = (0..cfg.num_particles)
        .map(|i| data.points()[i % n].clone())
        .collect();
    let mut ema = vec![0.0; w.len()];
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    let mut iters_used = 0;

    for t in 1..=cfg.max_iters {
        iters_used = t;
        let theta: Vec<f64> = w.iter().map(|&x| sigmoid(x)).collect();
        let sampler = SiteSampler::new(grid, &theta);
        if !cfg.persistent {
            for x in particles.iter_mut() {
                x.clone_from(&data.points()[rng.random_range(0..n)]);
            }
        }
        for x in particles.iter_mut() {
            for _ in 0..cfg.k {
                sampler.sweep(&mut x.0, &mut rng);
            }
        }
        let mut grad = gradient(&data_mean, &particles, grid);
        for (g, &fixed) in grad.iter_mut().zip(&pinned) {
            if fixed {
                *g = 0.0;
            }
        }
        let lr = cfg.step_size / (t as f64).sqrt();
        for (wj, g) in w.iter_mut().zip(&grad) {
            *wj = (*wj + lr * g).clamp(w_lo, w_hi);
        }
        for (e, g) in ema.iter_mut().zip(&grad) {
            *e = GRAD_EMA_DECAY * *e + (1.0 - GRAD_EMA_DECAY) * g;
        }
        // bias-corrected EMA
        let correction = 1.0 - GRAD_EMA_DECAY.powi(t as i32);
        grad_norm = ema.iter().map(|e| (e / correction).powi(2)).sum::<f64>().sqrt();
        if t >= MIN_ITERS_BEFORE_STOP && grad_norm <= cfg.grad_tol {
            converged = true;
            break;
        }
    }

    let theta_hat = w
        .iter()
        .zip(&stats.agree)
        .map(|(&x, &a)| match a {
            0 => THETA_CLAMP,
            a if a == n => 1.0 - THETA_CLAMP,
            _ => sigmoid(x).clamp(THETA_CLAMP, 1.0 - THETA_CLAMP),
        })
        .collect();
    Ok(MleResult {
        theta_hat: ThetaVector::new(theta_hat)?,
        grad_norm,
        iters_used,
        converged,
    })
}
