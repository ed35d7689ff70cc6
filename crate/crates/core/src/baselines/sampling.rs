//! Particle estimators of `log r = log Z(theta) - log Z(theta*)`.
//!
//! All estimators work on log unnormalized probabilities and combine them
//! with log-mean-exp, so extreme parameter values never overflow.

use rand::Rng;

use crate::error::{check_len, MrfError, Result};
use crate::math::log_mean_exp;
use crate::model::{random_configuration, Configuration, EdgeLogPotentials, GridSpec, SiteSampler, ThetaVector};

/// Particles together with the parameter they were last advanced under.
#[derive(Debug, Clone)]
pub struct ParticlePool {
    particles: Vec<Configuration>,
    theta: ThetaVector,
    coalesced: Option<bool>,
}

impl ParticlePool {
    /// Wraps existing draws, e.g. exact samples.
    pub fn from_particles(particles: Vec<Configuration>, theta: ThetaVector) -> Result<Self> {
        if particles.is_empty() {
            return Err(MrfError::Empty("particle pool"));
        }
        let d = particles[0].len();
        for x in &particles {
            check_len(d, x.len())?;
        }
        Ok(Self {
            particles,
            theta,
            coalesced: None,
        })
    }

    pub fn particles(&self) -> &[Configuration] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn theta(&self) -> &ThetaVector {
        &self.theta
    }

    /// Whether bounding chains coupled to the first particle met during
    /// `make_pool`. `None` outside the attractive regime or for wrapped draws.
    pub fn coalesced(&self) -> Option<bool> {
        self.coalesced
    }

    /// Advance every particle `sweeps` Gibbs sweeps under `theta` and retag.
    pub fn advance<R: Rng + ?Sized>(&mut self, theta: &ThetaVector, grid: &GridSpec, sweeps: usize, rng: &mut R) {
        let sampler = SiteSampler::new(grid, theta.as_slice());
        for x in self.particles.iter_mut() {
            for _ in 0..sweeps {
                sampler.sweep(&mut x.0, rng);
            }
        }
        self.theta.clone_from(theta);
    }
}

/// `s` particles from uniform random starts, each advanced `advance_sweeps`
/// sweeps under `theta`.
pub fn make_pool<R: Rng + ?Sized>(
    theta: &ThetaVector,
    grid: &GridSpec,
    s: usize,
    advance_sweeps: usize,
    rng: &mut R,
) -> Result<ParticlePool> {
    check_len(grid.num_edges(), theta.len())?;
    if s == 0 {
        return Err(MrfError::Empty("particle pool"));
    }
    let d = grid.num_nodes();
    let sampler = SiteSampler::new(grid, theta.as_slice());
    let mut particles = Vec::with_capacity(s);

    // The first particle shares its uniforms with chains from all-zeros and
    // all-ones; when those meet, every start (this one included) has merged.
    let mut first = random_configuration(d, rng);
    let coalesced = if theta.all_at_least(0.5) {
        let mut lo = Configuration::zeros(d);
        let mut hi = Configuration::ones(d);
        let mut uniforms = vec![0.0; d];
        for _ in 0..advance_sweeps {
            for u in uniforms.iter_mut() {
                *u = rng.random();
            }
            sampler.sweep_with(&mut first.0, &uniforms);
            sampler.sweep_with(&mut lo.0, &uniforms);
            sampler.sweep_with(&mut hi.0, &uniforms);
        }
        Some(lo == hi)
    } else {
        for _ in 0..advance_sweeps {
            sampler.sweep(&mut first.0, rng);
        }
        None
    };
    particles.push(first);

    for _ in 1..s {
        let mut x = random_configuration(d, rng);
        for _ in 0..advance_sweeps {
            sampler.sweep(&mut x.0, rng);
        }
        particles.push(x);
    }
    Ok(ParticlePool {
        particles,
        theta: theta.clone(),
        coalesced,
    })
}

fn check_pool(pool: &ParticlePool, grid: &GridSpec) -> Result<()> {
    if pool.is_empty() {
        return Err(MrfError::Empty("particle pool"));
    }
    check_len(grid.num_nodes(), pool.particles[0].len())
}

// log_mean_exp over the pool of sum_i c_i * log P~(x; theta_i)
fn log_mean_weight(pool: &ParticlePool, grid: &GridSpec, terms: &[(f64, &EdgeLogPotentials)]) -> f64 {
    let logs: Vec<f64> = pool
        .particles
        .iter()
        .map(|x| terms.iter().map(|(c, pot)| c * pot.score(grid, x.bits())).sum())
        .collect();
    log_mean_exp(&logs)
}

fn potentials(theta: &ThetaVector, grid: &GridSpec) -> Result<EdgeLogPotentials> {
    check_len(grid.num_edges(), theta.len())?;
    Ok(EdgeLogPotentials::new(theta.as_slice()))
}

/// Bridge estimator with the geometric bridge `(P~(x;theta) P~(x;theta*))^-1/2`:
/// `log mean_{x ~ theta*} sqrt(P~(x;theta)/P~(x;theta*))
///  - log mean_{x ~ theta} sqrt(P~(x;theta*)/P~(x;theta))`.
pub fn estimate_log_ratio_is_geometric(
    theta: &ThetaVector,
    theta_star: &ThetaVector,
    pool_theta: &ParticlePool,
    pool_theta_star: &ParticlePool,
    grid: &GridSpec,
) -> Result<f64> {
    check_pool(pool_theta, grid)?;
    check_pool(pool_theta_star, grid)?;
    let a = potentials(theta, grid)?;
    let b = potentials(theta_star, grid)?;
    let num = log_mean_weight(pool_theta_star, grid, &[(0.5, &a), (-0.5, &b)]);
    let den = log_mean_weight(pool_theta, grid, &[(0.5, &b), (-0.5, &a)]);
    Ok(num - den)
}

/// Auxiliary-variable estimator through a fixed reference `theta_hat`:
/// `log mean_{x ~ theta*} P~(x;theta_hat)/P~(x;theta*)
///  - log mean_{x ~ theta} P~(x;theta_hat)/P~(x;theta)`,
/// i.e. `log [Z(theta_hat)/Z(theta*)] - log [Z(theta_hat)/Z(theta)]`.
pub fn estimate_log_ratio_auxvar(
    theta: &ThetaVector,
    theta_star: &ThetaVector,
    theta_hat: &ThetaVector,
    pool_theta: &ParticlePool,
    pool_theta_star: &ParticlePool,
    grid: &GridSpec,
) -> Result<f64> {
    check_pool(pool_theta, grid)?;
    check_pool(pool_theta_star, grid)?;
    let a = potentials(theta, grid)?;
    let b = potentials(theta_star, grid)?;
    let h = potentials(theta_hat, grid)?;
    let star = log_mean_weight(pool_theta_star, grid, &[(1.0, &h), (-1.0, &b)]);
    let current = log_mean_weight(pool_theta, grid, &[(1.0, &h), (-1.0, &a)]);
    Ok(star - current)
}

/// `log mean_{x ~ theta*} P~(x;theta)/P~(x;theta*)`.
pub fn estimate_log_ratio_exchange(
    theta: &ThetaVector,
    theta_star: &ThetaVector,
    pool_theta_star: &ParticlePool,
    grid: &GridSpec,
) -> Result<f64> {
    check_pool(pool_theta_star, grid)?;
    let a = potentials(theta, grid)?;
    let b = potentials(theta_star, grid)?;
    Ok(log_mean_weight(pool_theta_star, grid, &[(1.0, &a), (-1.0, &b)]))
}

/// Advance the pool `k` sweeps under `theta*`, then estimate the ratio
/// against the parameter the pool was tagged with before the move. The pool
/// is retagged with `theta*`.
pub fn persistent_step<R: Rng + ?Sized>(
    pool: &mut ParticlePool,
    theta_star: &ThetaVector,
    k: usize,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<f64> {
    let theta = pool.theta.clone();
    persistent_step_from(pool, &theta, theta_star, k, grid, rng)
}

/// As [`persistent_step`], with the numerator parameter given explicitly.
/// A Metropolis-Hastings chain passes its current state here, since after a
/// rejection the pool's tag is the rejected proposal.
pub fn persistent_step_from<R: Rng + ?Sized>(
    pool: &mut ParticlePool,
    theta: &ThetaVector,
    theta_star: &ThetaVector,
    k: usize,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<f64> {
    check_pool(pool, grid)?;
    check_len(grid.num_edges(), theta_star.len())?;
    pool.advance(theta_star, grid, k, rng);
    estimate_log_ratio_exchange(theta, theta_star, pool, grid)
}
