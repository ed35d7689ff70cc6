use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Configuration, Dataset, GridSpec, ThetaVector};
use crate::error::{check_len, Result};
use crate::math::sigmoid;

pub const DEFAULT_BURN_IN_SWEEPS: usize = 1000;
pub const DEFAULT_SPACING_SWEEPS: usize = 10;

/// Full conditionals `P(X_v = 1 | neighbors)` for one parameter vector.
///
/// Grid nodes have at most four neighbors, so the conditional of every site
/// is tabulated over the 16 possible neighbor patterns up front; a sweep is
/// then one table lookup and one comparison per site.
#[derive(Debug, Clone)]
pub struct SiteSampler<'g> {
    grid: &'g GridSpec,
    // table[v * 16 + pattern], pattern bit k = value of the k-th neighbor
    table: Vec<f64>,
}

impl<'g> SiteSampler<'g> {
    pub fn new(grid: &'g GridSpec, theta: &[f64]) -> Self {
        let logits: Vec<f64> = theta.iter().map(|&t| crate::math::logit(t)).collect();
        let d = grid.num_nodes();
        let mut table = vec![0.0; d * 16];
        for v in 0..d {
            let nb = grid.neighbors(v);
            for pattern in 0..(1usize << nb.len()) {
                let field: f64 = nb
                    .iter()
                    .enumerate()
                    .map(|(k, &(_, e))| {
                        if (pattern >> k) & 1 == 1 {
                            logits[e]
                        } else {
                            -logits[e]
                        }
                    })
                    .sum();
                table[v * 16 + pattern] = sigmoid(field);
            }
        }
        Self { grid, table }
    }

    pub fn grid(&self) -> &GridSpec {
        self.grid
    }

    #[inline]
    pub fn prob_one(&self, x: &[u8], v: usize) -> f64 {
        let mut pattern = 0usize;
        for (k, &(u, _)) in self.grid.neighbors(v).iter().enumerate() {
            pattern |= (x[u] as usize) << k;
        }
        self.table[v * 16 + pattern]
    }

    /// One systematic-scan sweep in node order.
    pub fn sweep<R: Rng + ?Sized>(&self, x: &mut [u8], rng: &mut R) {
        for v in 0..x.len() {
            let u: f64 = rng.random();
            x[v] = (u < self.prob_one(x, v)) as u8;
        }
    }

    /// A sweep driven by caller-supplied uniforms, one per site. Chains fed
    /// the same uniforms are monotonically coupled when every `theta_j >= 0.5`.
    pub fn sweep_with(&self, x: &mut [u8], uniforms: &[f64]) {
        for (v, &u) in uniforms.iter().enumerate() {
            x[v] = (u < self.prob_one(x, v)) as u8;
        }
    }
}

pub fn random_configuration<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Configuration {
    Configuration((0..d).map(|_| rng.random_range(0..2u8)).collect())
}

/// One systematic Gibbs sweep, returning the new state.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    x: &Configuration,
    theta: &ThetaVector,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<Configuration> {
    check_len(grid.num_nodes(), x.len())?;
    check_len(grid.num_edges(), theta.len())?;
    let mut next = x.clone();
    SiteSampler::new(grid, theta.as_slice()).sweep(&mut next.0, rng);
    Ok(next)
}

/// Draw `n` configurations from a single Gibbs chain: random start,
/// `burn_in_sweeps` discarded sweeps, then `spacing_sweeps` sweeps between
/// consecutive retained states.
pub fn sample_dataset<R: Rng + ?Sized>(
    theta: &ThetaVector,
    grid: &GridSpec,
    n: usize,
    rng: &mut R,
    burn_in_sweeps: usize,
    spacing_sweeps: usize,
) -> Result<Dataset> {
    check_len(grid.num_edges(), theta.len())?;
    let sampler = SiteSampler::new(grid, theta.as_slice());
    let mut x = random_configuration(grid.num_nodes(), rng);
    for _ in 0..burn_in_sweeps {
        sampler.sweep(&mut x.0, rng);
    }
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            for _ in 0..spacing_sweeps {
                sampler.sweep(&mut x.0, rng);
            }
        }
        points.push(x.clone());
    }
    Dataset::new(grid.num_nodes(), points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoalescedSample {
    pub state: Configuration,
    pub coalesced: bool,
    pub sweeps_used: usize,
}

/// Coupling from the past with the all-zeros and all-ones bounding chains.
///
/// Each sweep back in time gets its own seed, so extending the window
/// further into the past reuses the randomness of the later sweeps. The
/// window doubles until the two bounding chains agree at time zero or the
/// window would exceed `max_sweeps`. On success the common state is an exact
/// draw. If some `theta_j < 0.5` the coupling is not monotone, and the
/// sampler falls back to `max_sweeps` plain sweeps from a random start and
/// reports `coalesced = false`.
pub fn coalesced_sample<R: Rng + ?Sized>(
    theta: &ThetaVector,
    grid: &GridSpec,
    rng: &mut R,
    max_sweeps: usize,
) -> Result<CoalescedSample> {
    check_len(grid.num_edges(), theta.len())?;
    let d = grid.num_nodes();
    let sampler = SiteSampler::new(grid, theta.as_slice());

    if !theta.all_at_least(0.5) {
        let mut x = random_configuration(d, rng);
        for _ in 0..max_sweeps {
            sampler.sweep(&mut x.0, rng);
        }
        return Ok(CoalescedSample {
            state: x,
            coalesced: false,
            sweeps_used: max_sweeps,
        });
    }

    // seeds[k] drives the sweep that ends at time -k.
    let mut seeds: Vec<u64> = Vec::new();
    let mut uniforms = vec![0.0; d];
    let mut window = 1usize.min(max_sweeps);
    loop {
        while seeds.len() < window {
            seeds.push(rng.random());
        }
        let mut lower = Configuration::zeros(d);
        let mut upper = Configuration::ones(d);
        for k in (0..window).rev() {
            let mut sweep_rng = ChaCha8Rng::seed_from_u64(seeds[k]);
            for u in uniforms.iter_mut() {
                *u = sweep_rng.random();
            }
            sampler.sweep_with(&mut lower.0, &uniforms);
            sampler.sweep_with(&mut upper.0, &uniforms);
        }
        if lower == upper && window > 0 {
            return Ok(CoalescedSample {
                state: lower,
                coalesced: true,
                sweeps_used: window,
            });
        }
        if window >= max_sweeps {
            return Ok(CoalescedSample {
                state: lower,
                coalesced: false,
                sweeps_used: window,
            });
        }
        window = (window * 2).min(max_sweeps);
    }
}
