//! Pseudolikelihood and a quadratic surrogate of the log-likelihood around
//! the MLE.

use rand::Rng;

use crate::error::{check_len, MrfError, Result};
use crate::exact::{exact_model_moments, recursive_log_z, MAX_BRUTE_FORCE_NODES, MAX_WINDOW};
use crate::math::{log_sigmoid, logit};
use crate::model::{random_configuration, Dataset, GridSpec, SiteSampler, SufficientStats, ThetaVector};

/// Dataset preprocessed for repeated pseudolikelihood evaluation.
///
/// Stores each point's edge-agreement pattern. The site conditional of
/// `x_v` given its neighbours is `sigmoid(sum_e ±w_e)`, the sign being `+`
/// where edge `e` agrees, so one evaluation costs `O(n * d * degree)`.
#[derive(Debug, Clone)]
pub struct PseudoLikelihood {
    p: usize,
    n: usize,
    // agreement bits, n x p
    agree: Vec<bool>,
    // incident edges per node
    incident: Vec<Vec<usize>>,
}

impl PseudoLikelihood {
    pub fn new(data: &Dataset, grid: &GridSpec) -> Result<Self> {
        check_len(grid.num_nodes(), data.num_nodes())?;
        let p = grid.num_edges();
        let mut agree = Vec::with_capacity(data.len() * p);
        for x in data.points() {
            agree.extend(grid.agreements(x.bits()));
        }
        let incident = (0..grid.num_nodes())
            .map(|v| grid.neighbors(v).iter().map(|&(_, e)| e).collect())
            .collect();
        Ok(Self {
            p,
            n: data.len(),
            agree,
            incident,
        })
    }

    pub fn num_params(&self) -> usize {
        self.p
    }

    /// Unchecked evaluation for `theta` in `(0, 1)^p`.
    pub fn eval(&self, theta: &[f64]) -> f64 {
        let w: Vec<f64> = theta.iter().map(|&t| logit(t)).collect();
        let mut signed = vec![0.0; self.p];
        let mut total = 0.0;
        for i in 0..self.n {
            let row = &self.agree[i * self.p..(i + 1) * self.p];
            for ((s, &a), &wj) in signed.iter_mut().zip(row).zip(&w) {
                *s = if a { wj } else { -wj };
            }
            for edges in &self.incident {
                let field: f64 = edges.iter().map(|&e| signed[e]).sum();
                total += log_sigmoid(field);
            }
        }
        total
    }
}

/// `sum_i sum_v log P(x_v^i | x_ne(v)^i; theta)`.
pub fn log_pseudolikelihood(data: &Dataset, theta: &ThetaVector, grid: &GridSpec) -> Result<f64> {
    check_len(grid.num_edges(), theta.len())?;
    Ok(PseudoLikelihood::new(data, grid)?.eval(theta.as_slice()))
}

/// Where `fit_laplace_with` takes the moments of the sufficient statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSource {
    /// Enumeration when `d <= 20`, sampling otherwise.
    Auto,
    Exact,
    Sampled,
}

pub const LAPLACE_BURN_IN_SWEEPS: usize = 1000;
pub const DEFAULT_LAPLACE_SAMPLES: usize = 10_000;

/// Second-order expansion of the log-partition around `w_hat = logit(theta_hat)`.
#[derive(Debug, Clone)]
pub struct LaplaceModel {
    pub w_hat: Vec<f64>,
    pub mu_hat: Vec<f64>,
    pub cov_hat: Vec<Vec<f64>>,
    /// `log Z(theta_hat)`, when the recursion can compute it.
    pub log_z_at_mode: Option<f64>,
    pub exact_moments: bool,
}

impl LaplaceModel {
    pub fn num_params(&self) -> usize {
        self.w_hat.len()
    }

    /// Exact log-likelihood at `theta_hat`, or 0 when `log Z` is unavailable.
    pub fn log_l_at_mode(&self, stats: &SufficientStats) -> f64 {
        match self.log_z_at_mode {
            Some(log_z) if stats.n > 0 => {
                let theta: Vec<f64> = self.w_hat.iter().map(|&w| crate::math::sigmoid(w)).collect();
                stats.unnormalized_log_likelihood(&theta) - stats.n as f64 * log_z
            }
            _ => 0.0,
        }
    }

    /// Unchecked evaluation for `theta` in `(0, 1)^p`.
    pub fn eval(&self, theta: &[f64], s_bar: &[f64], n: f64, at_mode: f64) -> f64 {
        let dw: Vec<f64> = theta
            .iter()
            .zip(&self.w_hat)
            .map(|(&t, &w)| logit(t) - w)
            .collect();
        let mut linear = 0.0;
        let mut quad = 0.0;
        for j in 0..dw.len() {
            linear += (s_bar[j] - self.mu_hat[j]) * dw[j];
            let row = &self.cov_hat[j];
            let mut acc = 0.0;
            for k in 0..dw.len() {
                acc += row[k] * dw[k];
            }
            quad += dw[j] * acc;
        }
        at_mode + n * (linear - 0.5 * quad)
    }
}

pub fn fit_laplace<R: Rng + ?Sized>(
    theta_hat: &ThetaVector,
    grid: &GridSpec,
    sample_budget: usize,
    rng: &mut R,
) -> Result<LaplaceModel> {
    fit_laplace_with(theta_hat, grid, sample_budget, MomentSource::Auto, rng)
}

pub fn fit_laplace_with<R: Rng + ?Sized>(
    theta_hat: &ThetaVector,
    grid: &GridSpec,
    sample_budget: usize,
    source: MomentSource,
    rng: &mut R,
) -> Result<LaplaceModel> {
    check_len(grid.num_edges(), theta_hat.len())?;
    let exact = match source {
        MomentSource::Auto => grid.num_nodes() <= MAX_BRUTE_FORCE_NODES,
        MomentSource::Exact => true,
        MomentSource::Sampled => false,
    };
    let (mu_hat, cov_hat) = if exact {
        let m = exact_model_moments(theta_hat, grid)?;
        (m.mean, m.cov)
    } else {
        if sample_budget < 2 {
            return Err(MrfError::Domain("sample_budget must be at least 2".into()));
        }
        sampled_moments(theta_hat, grid, sample_budget, rng)
    };
    let log_z_at_mode = if grid.short_side() <= MAX_WINDOW {
        Some(recursive_log_z(theta_hat, grid)?)
    } else {
        None
    };
    Ok(LaplaceModel {
        w_hat: theta_hat.logits(),
        mu_hat,
        cov_hat,
        log_z_at_mode,
        exact_moments: exact,
    })
}

// One Gibbs chain, burn-in then one sweep between samples.
fn sampled_moments<R: Rng + ?Sized>(
    theta: &ThetaVector,
    grid: &GridSpec,
    samples: usize,
    rng: &mut R,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let p = grid.num_edges();
    let sampler = SiteSampler::new(grid, theta.as_slice());
    let mut x = random_configuration(grid.num_nodes(), rng);
    for _ in 0..LAPLACE_BURN_IN_SWEEPS {
        sampler.sweep(&mut x.0, rng);
    }
    let mut sum = vec![0.0; p];
    let mut cross = vec![vec![0.0; p]; p];
    let mut s = vec![0.0; p];
    for _ in 0..samples {
        sampler.sweep(&mut x.0, rng);
        for (sj, a) in s.iter_mut().zip(grid.agreements(x.bits())) {
            *sj = f64::from(a as u8);
        }
        for j in 0..p {
            sum[j] += s[j];
            if s[j] != 0.0 {
                for k in 0..p {
                    cross[j][k] += s[k];
                }
            }
        }
    }
    let m = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|v| v / m).collect();
    let cov = (0..p)
        .map(|j| {
            (0..p)
                .map(|k| (cross[j][k] - m * mean[j] * mean[k]) / (m - 1.0))
                .collect()
        })
        .collect();
    (mean, cov)
}

/// `log_l_at_mode + n [ (s_bar - mu_hat)'dw - dw' cov_hat dw / 2 ]` with
/// `dw = logit(theta) - w_hat` and `s_bar = alpha / n`.
pub fn log_laplace_likelihood(
    theta: &ThetaVector,
    lm: &LaplaceModel,
    stats: &SufficientStats,
) -> Result<f64> {
    check_len(lm.num_params(), theta.len())?;
    check_len(lm.num_params(), stats.agree.len())?;
    if stats.n == 0 {
        return Ok(0.0);
    }
    Ok(lm.eval(
        theta.as_slice(),
        &stats.mean(),
        stats.n as f64,
        lm.log_l_at_mode(stats),
    ))
}
