//! Exact partition function and log-likelihood for small or narrow grids.
//!
//! [`brute_force_log_z`] enumerates all `2^d` states and is kept as the
//! reference. [`recursive_log_z`] sweeps the grid one node at a time along
//! the longer side and carries an unnormalized table over the sliding
//! window of nodes that still have unvisited neighbors. That window never
//! holds more than `l + 1` nodes, `l = min(rows, cols)`, so one pass costs
//! `O(d * 2^(l+1))`.

use crate::error::{check_len, MrfError, Result};
use crate::math::LogSumExp;
use crate::model::{GridSpec, SufficientStats, ThetaVector};

pub const MAX_BRUTE_FORCE_NODES: usize = 20;
pub const MAX_WINDOW: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactMethod {
    BruteForce,
    Recursive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactResult {
    pub log_z: f64,
    pub method: ExactMethod,
}

/// Recursion when the window fits, enumeration otherwise.
pub fn log_partition(theta: &ThetaVector, grid: &GridSpec) -> Result<ExactResult> {
    if grid.short_side() <= MAX_WINDOW {
        recursive_log_z(theta, grid).map(|log_z| ExactResult {
            log_z,
            method: ExactMethod::Recursive,
        })
    } else {
        brute_force_log_z(theta, grid).map(|log_z| ExactResult {
            log_z,
            method: ExactMethod::BruteForce,
        })
    }
}

fn check_enumerable(grid: &GridSpec) -> Result<()> {
    if grid.num_nodes() > MAX_BRUTE_FORCE_NODES {
        return Err(MrfError::TooLarge {
            method: "enumeration",
            detail: format!(
                "{} nodes exceeds the limit of {MAX_BRUTE_FORCE_NODES}",
                grid.num_nodes()
            ),
        });
    }
    Ok(())
}

// log P~ for every state, indexed by bitmask (bit v = node v).
fn for_each_state<F: FnMut(u64, f64)>(theta: &[f64], grid: &GridSpec, mut f: F) {
    let log_agree: Vec<f64> = theta.iter().map(|t| t.ln()).collect();
    let log_disagree: Vec<f64> = theta.iter().map(|t| (1.0 - t).ln()).collect();
    for mask in 0..(1u64 << grid.num_nodes()) {
        let mut lp = 0.0;
        for (j, &(u, v)) in grid.edges().iter().enumerate() {
            lp += if (mask >> u) & 1 == (mask >> v) & 1 {
                log_agree[j]
            } else {
                log_disagree[j]
            };
        }
        f(mask, lp);
    }
}

pub fn brute_force_log_z(theta: &ThetaVector, grid: &GridSpec) -> Result<f64> {
    check_len(grid.num_edges(), theta.len())?;
    check_enumerable(grid)?;
    let mut acc = LogSumExp::new();
    for_each_state(theta.as_slice(), grid, |_, lp| acc.add(lp));
    Ok(acc.value())
}

pub fn recursive_log_z(theta: &ThetaVector, grid: &GridSpec) -> Result<f64> {
    check_len(grid.num_edges(), theta.len())?;
    if grid.short_side() > MAX_WINDOW {
        return Err(MrfError::TooLarge {
            method: "transfer-window recursion",
            detail: format!(
                "window of {} nodes exceeds the limit of {MAX_WINDOW}",
                grid.short_side()
            ),
        });
    }
    Ok(TransferWindow::new(grid).log_z(theta.as_slice()))
}

/// Reusable state for the windowed forward pass over one grid.
#[derive(Debug, Clone)]
pub struct TransferWindow<'g> {
    grid: &'g GridSpec,
    order: Vec<usize>,
    table: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'g> TransferWindow<'g> {
    pub fn new(grid: &'g GridSpec) -> Self {
        let (rows, cols) = (grid.rows(), grid.cols());
        // Walk along the longer side so the window spans the shorter one.
        let order = if rows <= cols {
            (0..cols)
                .flat_map(|c| (0..rows).map(move |r| r * cols + c))
                .collect()
        } else {
            (0..rows * cols).collect()
        };
        let cap = 1usize << (grid.short_side() + 1);
        Self {
            grid,
            order,
            table: Vec::with_capacity(cap),
            scratch: Vec::with_capacity(cap),
        }
    }

    pub fn log_z(&mut self, theta: &[f64]) -> f64 {
        let grid = self.grid;
        let d = grid.num_nodes();
        let mut remaining: Vec<usize> = (0..d).map(|v| grid.neighbors(v).len()).collect();
        let mut added = vec![false; d];
        let mut position = vec![usize::MAX; d];
        let mut window: Vec<usize> = Vec::with_capacity(grid.short_side() + 1);
        let mut log_scale = 0.0;

        self.table.clear();
        self.table.push(1.0);

        let order = std::mem::take(&mut self.order);
        for &v in &order {
            // Bring v into the window: duplicate the table along a new high bit.
            let bit = window.len();
            debug_assert!(bit <= grid.short_side());
            self.table.extend_from_within(..);

            for &(u, e) in grid.neighbors(v) {
                if !added[u] {
                    continue;
                }
                let pu = position[u];
                let (agree, disagree) = (theta[e], 1.0 - theta[e]);
                for (idx, w) in self.table.iter_mut().enumerate() {
                    *w *= if (idx >> pu) & 1 == (idx >> bit) & 1 {
                        agree
                    } else {
                        disagree
                    };
                }
                remaining[u] -= 1;
                remaining[v] -= 1;
            }
            added[v] = true;
            position[v] = bit;
            window.push(v);

            // Sum out every node whose neighbors have all been visited.
            let mut k = 0;
            while k < window.len() {
                if remaining[window[k]] == 0 {
                    self.marginalize(k);
                    window.remove(k);
                    for &w in &window[k..] {
                        position[w] -= 1;
                    }
                } else {
                    k += 1;
                }
            }

            let max = self.table.iter().copied().fold(0.0, f64::max);
            for w in self.table.iter_mut() {
                *w /= max;
            }
            log_scale += max.ln();
        }
        self.order = order;
        debug_assert!(window.is_empty() && self.table.len() == 1);
        log_scale + self.table[0].ln()
    }

    fn marginalize(&mut self, bit: usize) {
        let half = self.table.len() / 2;
        let low_mask = (1usize << bit) - 1;
        self.scratch.clear();
        self.scratch.extend((0..half).map(|i| {
            let base = ((i >> bit) << (bit + 1)) | (i & low_mask);
            self.table[base] + self.table[base | (1 << bit)]
        }));
        std::mem::swap(&mut self.table, &mut self.scratch);
    }
}

/// `sum_j [alpha_j log theta_j + (n - alpha_j) log(1 - theta_j)] - n log Z(theta)`.
pub fn exact_log_likelihood(
    stats: &SufficientStats,
    theta: &ThetaVector,
    grid: &GridSpec,
) -> Result<f64> {
    check_len(grid.num_edges(), theta.len())?;
    check_len(grid.num_edges(), stats.agree.len())?;
    if stats.n == 0 {
        return Ok(0.0);
    }
    let log_z = log_partition(theta, grid)?.log_z;
    Ok(stats.unnormalized_log_likelihood(theta.as_slice()) - stats.n as f64 * log_z)
}

/// Mean and covariance of the agreement statistics under `P(X; theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMoments {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

pub fn exact_model_moments(theta: &ThetaVector, grid: &GridSpec) -> Result<ModelMoments> {
    check_len(grid.num_edges(), theta.len())?;
    check_enumerable(grid)?;
    let p = grid.num_edges();
    let log_z = brute_force_log_z(theta, grid)?;
    let mut mean = vec![0.0; p];
    let mut second = vec![vec![0.0; p]; p];
    let mut agreeing = Vec::with_capacity(p);
    for_each_state(theta.as_slice(), grid, |mask, lp| {
        let w = (lp - log_z).exp();
        agreeing.clear();
        agreeing.extend(
            grid.edges()
                .iter()
                .enumerate()
                .filter(|(_, &(u, v))| (mask >> u) & 1 == (mask >> v) & 1)
                .map(|(j, _)| j),
        );
        for (a, &j) in agreeing.iter().enumerate() {
            mean[j] += w;
            for &k in &agreeing[a..] {
                second[j][k] += w;
            }
        }
    });
    let mut cov = vec![vec![0.0; p]; p];
    for j in 0..p {
        for k in j..p {
            let c = second[j][k] - mean[j] * mean[k];
            cov[j][k] = c;
            cov[k][j] = c;
        }
    }
    Ok(ModelMoments { mean, cov })
}
