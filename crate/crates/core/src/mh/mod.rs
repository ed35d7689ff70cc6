//! Random-walk Metropolis-Hastings over `theta` with pluggable ratio
//! strategies.
//!
//! Under a uniform prior and a symmetric Gaussian proposal the log
//! acceptance ratio is the strategy's log-likelihood difference. The engine
//! draws every proposal and acceptance uniform from its own seeded stream,
//! so chains with the same seed see the same proposals whatever the
//! strategy.

mod strategies;

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{MrfError, Result};
use crate::model::{SufficientStats, ThetaVector};

pub use strategies::{
    ExactLikelihood, LaplaceLikelihood, LikelihoodStrategy, LogLikelihood, ParticleSettings, RatioEstimator,
    SamplingStrategy,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MhConfig {
    pub steps: usize,
    /// Proposal variance per coordinate.
    pub sigma_q2: f64,
    pub prior_low: f64,
    pub prior_high: f64,
    pub burn_in_fraction: f64,
    pub thin: usize,
    pub seed: u64,
}

impl Default for MhConfig {
    fn default() -> Self {
        Self {
            steps: 1_000_000,
            sigma_q2: 0.001,
            prior_low: 0.0,
            prior_high: 1.0,
            burn_in_fraction: 0.2,
            thin: 1,
            seed: 0,
        }
    }
}

impl MhConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.thin == 0 {
            return Err(MrfError::Domain("steps and thin must be positive".into()));
        }
        if !(self.sigma_q2 > 0.0 && self.sigma_q2.is_finite()) {
            return Err(MrfError::Domain("sigma_q2 must be positive".into()));
        }
        if !(0.0 <= self.prior_low && self.prior_low < self.prior_high && self.prior_high <= 1.0) {
            return Err(MrfError::Domain(format!(
                "prior support ({}, {}) must satisfy 0 <= low < high <= 1",
                self.prior_low, self.prior_high
            )));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(MrfError::Domain("burn_in_fraction must be in [0, 1)".into()));
        }
        Ok(())
    }

    /// Steps kept after burn-in, before thinning.
    fn kept_span(&self) -> usize {
        (self.steps as f64 * (1.0 - self.burn_in_fraction)).floor() as usize
    }

    pub fn burn_in_steps(&self) -> usize {
        self.steps - self.kept_span()
    }

    pub fn retained(&self) -> usize {
        self.kept_span() / self.thin
    }

    /// Open prior support, intersected with `(0, 1)`.
    pub fn in_support(&self, theta: &[f64]) -> bool {
        theta
            .iter()
            .all(|&t| t > self.prior_low && t < self.prior_high && t > 0.0 && t < 1.0)
    }

    /// Midpoint of the prior support in every coordinate.
    pub fn default_start(&self, p: usize) -> Result<ThetaVector> {
        ThetaVector::uniform(p, 0.5 * (self.prior_low + self.prior_high))
    }
}

/// Produces the log-likelihood part of the MH ratio for a proposed move.
pub trait RatioStrategy {
    fn name(&self) -> &str;

    /// `log L(proposed) - log L(current)`, or the estimated equivalent.
    fn log_ratio(&mut self, current: &[f64], proposed: &[f64]) -> f64;

    /// Told whether the last move passed to `log_ratio` was accepted.
    fn accept(&mut self, _accepted: bool) {}
}

impl<S: RatioStrategy + ?Sized> RatioStrategy for Box<S> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn log_ratio(&mut self, current: &[f64], proposed: &[f64]) -> f64 {
        (**self).log_ratio(current, proposed)
    }

    fn accept(&mut self, accepted: bool) {
        (**self).accept(accepted)
    }
}

/// Data term plus estimated partition ratio:
/// `sum_i [log P~(x_i; theta*) - log P~(x_i; theta)] + n log r`, where
/// `r` estimates `Z(theta) / Z(theta*)`.
pub fn ratio_based_log_mh(stats: &SufficientStats, theta: &[f64], theta_star: &[f64], log_r: f64) -> f64 {
    stats.unnormalized_log_likelihood(theta_star) - stats.unnormalized_log_likelihood(theta)
        + stats.n as f64 * log_r
}

/// Log acceptance ratio: `-inf` outside the prior support, and `-inf` for
/// any non-finite strategy output.
pub fn log_mh_ratio<S: RatioStrategy + ?Sized>(
    theta: &[f64],
    theta_star: &[f64],
    strategy: &mut S,
    cfg: &MhConfig,
) -> f64 {
    if !cfg.in_support(theta_star) {
        return f64::NEG_INFINITY;
    }
    let v = strategy.log_ratio(theta, theta_star);
    if v.is_nan() || v == f64::INFINITY {
        f64::NEG_INFINITY
    } else {
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    /// Retained states, row-major `T x p`.
    chain: Vec<f64>,
    p: usize,
    pub accepted: usize,
    pub steps: usize,
    pub runtime_ms: f64,
    pub strategy_name: String,
    /// Strategy outputs that were NaN or `+inf` and were rejected.
    pub nonfinite_warnings: usize,
    burn_in_steps: usize,
    thin: usize,
}

impl PosteriorSamples {
    pub fn len(&self) -> usize {
        self.chain.len() / self.p.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    pub fn num_params(&self) -> usize {
        self.p
    }

    pub fn sample(&self, t: usize) -> &[f64] {
        &self.chain[t * self.p..(t + 1) * self.p]
    }

    pub fn samples(&self) -> impl Iterator<Item = &[f64]> {
        self.chain.chunks_exact(self.p)
    }

    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.samples().map(|s| s[j]).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.steps as f64
    }

    /// True when not a single proposal was accepted.
    pub fn never_moved(&self) -> bool {
        self.accepted == 0
    }

    /// 0-based MH step at which retained sample `t` was recorded.
    pub fn step_index(&self, t: usize) -> usize {
        self.burn_in_steps + (t + 1) * self.thin - 1
    }

    pub fn runtime_per_step_ms(&self) -> f64 {
        self.runtime_ms / self.steps as f64
    }

    /// CSV rows `step_index, theta_0, ..., theta_{p-1}` for retained samples.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step_index".to_string()];
        header.extend((0..self.p).map(|j| format!("theta_{j}")));
        w.write_record(&header).map_err(|e| MrfError::Parse(e.to_string()))?;
        for (t, s) in self.samples().enumerate() {
            let mut row = vec![self.step_index(t).to_string()];
            row.extend(s.iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(|e| MrfError::Parse(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Run `cfg.steps` MH steps from `theta0`.
pub fn run_chain<S: RatioStrategy + ?Sized>(
    cfg: &MhConfig,
    strategy: &mut S,
    theta0: &ThetaVector,
) -> Result<PosteriorSamples> {
    cfg.validate()?;
    if !cfg.in_support(theta0.as_slice()) {
        return Err(MrfError::Domain("theta0 lies outside the prior support".into()));
    }
    let p = theta0.len();
    let sd = cfg.sigma_q2.sqrt();
    let burn = cfg.burn_in_steps();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = theta0.as_slice().to_vec();
    let mut proposal = vec![0.0; p];
    let mut chain = Vec::with_capacity(cfg.retained() * p);
    let mut accepted = 0;
    let mut warnings = 0;

    let start = Instant::now();
    for step in 0..cfg.steps {
        for (q, &c) in proposal.iter_mut().zip(&current) {
            let z: f64 = rng.sample(StandardNormal);
            *q = c + sd * z;
        }
        let u: f64 = rng.random();
        let accept = if cfg.in_support(&proposal) {
            let raw = strategy.log_ratio(&current, &proposal);
            let log_a = if raw.is_nan() || raw == f64::INFINITY {
                warnings += 1;
                f64::NEG_INFINITY
            } else {
                raw
            };
            let ok = u.ln() < log_a;
            strategy.accept(ok);
            ok
        } else {
            false
        };
        if accept {
            current.copy_from_slice(&proposal);
            accepted += 1;
        }
        if step >= burn && (step - burn + 1).is_multiple_of(cfg.thin) {
            chain.extend_from_slice(&current);
        }
    }
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;

    Ok(PosteriorSamples {
        chain,
        p,
        accepted,
        steps: cfg.steps,
        runtime_ms,
        strategy_name: strategy.name().to_string(),
        nonfinite_warnings: warnings,
        burn_in_steps: burn,
        thin: cfg.thin,
    })
}

/// Per-coordinate posterior mean and unbiased standard deviation.
pub fn posterior_summary(ps: &PosteriorSamples) -> Result<(Vec<f64>, Vec<f64>)> {
    if ps.is_empty() {
        return Err(MrfError::Empty("retained chain"));
    }
    let t = ps.len() as f64;
    let mut mean = vec![0.0; ps.p];
    for s in ps.samples() {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= t;
    }
    let mut ss = vec![0.0; ps.p];
    for s in ps.samples() {
        for ((acc, v), m) in ss.iter_mut().zip(s).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let sd = ss
        .iter()
        .map(|v| if ps.len() > 1 { (v / (t - 1.0)).sqrt() } else { 0.0 })
        .collect();
    Ok((mean, sd))
}

/// Batch-means Monte Carlo standard error of the mean of a correlated series,
/// with about `sqrt(len)` batches.
pub fn batch_means_se(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 4 {
        return Err(MrfError::Empty("series for batch means"));
    }
    let batches = (n as f64).sqrt().floor() as usize;
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| series[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok((var / batches as f64).sqrt())
}

/// Check that a proposal sequence is reproducible: the first `steps`
/// proposals the engine would draw from `theta0` if every move were rejected.
pub fn proposal_sequence(cfg: &MhConfig, theta0: &[f64], steps: usize) -> Vec<Vec<f64>> {
    let sd = cfg.sigma_q2.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..steps)
        .map(|_| {
            let q = theta0
                .iter()
                .map(|&c| c + sd * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let _: f64 = rng.random();
            q
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Flat;

    impl RatioStrategy for Flat {
        fn name(&self) -> &str {
            "flat"
        }

        fn log_ratio(&mut self, _: &[f64], _: &[f64]) -> f64 {
            0.0
        }
    }

    struct Broken;

    impl RatioStrategy for Broken {
        fn name(&self) -> &str {
            "broken"
        }

        fn log_ratio(&mut self, _: &[f64], _: &[f64]) -> f64 {
            f64::NAN
        }
    }

    fn cfg(steps: usize) -> MhConfig {
        MhConfig {
            steps,
            seed: 7,
            ..MhConfig::default()
        }
    }

    #[test]
    fn retained_count() {
        let c = MhConfig { steps: 1000, burn_in_fraction: 0.2, thin: 3, ..cfg(1000) };
        assert_eq!(c.retained(), 266);
        let t0 = ThetaVector::uniform(2, 0.5).unwrap();
        let ps = run_chain(&c, &mut Flat, &t0).unwrap();
        assert_eq!(ps.len(), 266);
        assert_eq!(ps.step_index(ps.len() - 1), 997);
        assert_eq!(ps.strategy_name, "flat");
    }

    #[test]
    fn same_point_ratio_is_zero_and_outside_support_rejected() {
        let c = cfg(10);
        assert_eq!(log_mh_ratio(&[0.5], &[0.5], &mut Flat, &c), 0.0);
        assert_eq!(log_mh_ratio(&[0.5], &[1.2], &mut Flat, &c), f64::NEG_INFINITY);
        let narrow = MhConfig { prior_low: 0.4, prior_high: 0.6, ..c };
        assert_eq!(log_mh_ratio(&[0.5], &[0.39], &mut Flat, &narrow), f64::NEG_INFINITY);
        assert_eq!(log_mh_ratio(&[0.5], &[0.55], &mut Broken, &narrow), f64::NEG_INFINITY);
    }

    #[test]
    fn nonfinite_outputs_are_counted_and_rejected() {
        let t0 = ThetaVector::uniform(3, 0.5).unwrap();
        let ps = run_chain(&cfg(200), &mut Broken, &t0).unwrap();
        assert_eq!(ps.accepted, 0);
        assert!(ps.never_moved());
        assert_eq!(ps.nonfinite_warnings, 200);
        let (mean, sd) = posterior_summary(&ps).unwrap();
        assert!(mean.iter().all(|&m| m == 0.5));
        assert!(sd.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn tiny_proposals_stay_at_start() {
        let c = MhConfig { sigma_q2: 1e-20, ..cfg(500) };
        let t0 = ThetaVector::new(vec![0.3, 0.6]).unwrap();
        let ps = run_chain(&c, &mut Flat, &t0).unwrap();
        let (mean, _) = posterior_summary(&ps).unwrap();
        assert!((mean[0] - 0.3).abs() < 1e-8 && (mean[1] - 0.6).abs() < 1e-8);
    }

    #[test]
    fn two_point_summary() {
        let ps = PosteriorSamples {
            chain: vec![0.2, 0.6],
            p: 1,
            accepted: 1,
            steps: 2,
            runtime_ms: 0.0,
            strategy_name: "x".into(),
            nonfinite_warnings: 0,
            burn_in_steps: 0,
            thin: 1,
        };
        let (mean, sd) = posterior_summary(&ps).unwrap();
        assert!((mean[0] - 0.4).abs() < 1e-15);
        assert!((sd[0] - 0.4 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn proposals_do_not_depend_on_strategy() {
        let c = MhConfig { sigma_q2: 1e-20, ..cfg(5) };
        let seq = proposal_sequence(&c, &[0.5, 0.5], 5);
        assert_eq!(seq, proposal_sequence(&c, &[0.5, 0.5], 5));
        assert_eq!(seq.len(), 5);
    }

    #[test]
    fn config_validation() {
        assert!(MhConfig { burn_in_fraction: 1.0, ..cfg(1) }.validate().is_err());
        assert!(MhConfig { prior_low: 0.6, prior_high: 0.5, ..cfg(1) }.validate().is_err());
        assert!(MhConfig { thin: 0, ..cfg(1) }.validate().is_err());
        let t0 = ThetaVector::uniform(1, 0.5).unwrap();
        let narrow = MhConfig { prior_low: 0.6, ..cfg(1) };
        assert!(run_chain(&narrow, &mut Flat, &t0).is_err());
    }

    #[test]
    fn chain_dump_rows() {
        let c = MhConfig { burn_in_fraction: 0.5, ..cfg(4) };
        let t0 = ThetaVector::uniform(2, 0.5).unwrap();
        let ps = run_chain(&MhConfig { sigma_q2: 1e-20, ..c }, &mut Broken, &t0).unwrap();
        let mut buf = Vec::new();
        ps.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "step_index,theta_0,theta_1\n2,0.5,0.5\n3,0.5,0.5\n");
    }
}
