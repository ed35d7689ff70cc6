//! The binary pairwise grid MRF: topology, parameters, data and
//! sufficient statistics.
//!
//! Every edge `j` joining nodes `u` and `v` carries the potential
//! `theta_j` when `x_u == x_v` and `1 - theta_j` otherwise, so the
//! unnormalized log-probability is linear in the per-edge agreement
//! indicators.

mod gibbs;
mod io;

pub use gibbs::{
    coalesced_sample, gibbs_sweep, random_configuration, sample_dataset, CoalescedSample,
    SiteSampler, DEFAULT_BURN_IN_SWEEPS, DEFAULT_SPACING_SWEEPS,
};
pub use io::{read_mrfdat, write_mrfdat, MRFDAT_EXTENSION};

use crate::error::{check_len, MrfError, Result};

/// Grid topology with the canonical edge ordering.
///
/// Nodes are numbered row-major. Horizontal edges come first (row-major by
/// their left endpoint), then vertical edges (row-major by their upper
/// endpoint). Edge index `j` is the parameter index `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    rows: usize,
    cols: usize,
    edges: Vec<(usize, usize)>,
    // node -> [(neighbor, edge index)]
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(MrfError::InvalidGrid(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if rows * cols < 2 {
            return Err(MrfError::InvalidGrid("a grid needs at least two nodes".into()));
        }
        let node = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::with_capacity(rows * (cols - 1) + (rows - 1) * cols);
        for r in 0..rows {
            for c in 0..cols - 1 {
                edges.push((node(r, c), node(r, c + 1)));
            }
        }
        for r in 0..rows - 1 {
            for c in 0..cols {
                edges.push((node(r, c), node(r + 1, c)));
            }
        }
        let mut adjacency = vec![Vec::new(); rows * cols];
        for (j, &(u, v)) in edges.iter().enumerate() {
            adjacency[u].push((v, j));
            adjacency[v].push((u, j));
        }
        Ok(Self {
            rows,
            cols,
            edges,
            adjacency,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of nodes, `d`.
    pub fn num_nodes(&self) -> usize {
        self.rows * self.cols
    }

    /// Number of edges (= parameters), `p`.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `(neighbor, edge index)` pairs of node `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    /// Width of the shorter side.
    pub fn short_side(&self) -> usize {
        self.rows.min(self.cols)
    }

    /// Per-edge agreement indicators `s_j(x)` of a configuration.
    pub fn agreements<'a>(&'a self, x: &'a [u8]) -> impl Iterator<Item = bool> + 'a {
        self.edges.iter().map(move |&(u, v)| x[u] == x[v])
    }
}

pub fn build_grid(rows: usize, cols: usize) -> Result<GridSpec> {
    GridSpec::new(rows, cols)
}

/// Edge parameters, each strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaVector(Vec<f64>);

impl ThetaVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((j, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && **v < 1.0))
        {
            return Err(MrfError::Domain(format!(
                "theta[{j}] = {v} is not in the open interval (0, 1)"
            )));
        }
        Ok(Self(values))
    }

    pub fn uniform(p: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; p])
    }

    /// Validate the length against a grid as well as the domain.
    pub fn for_grid(values: Vec<f64>, grid: &GridSpec) -> Result<Self> {
        check_len(grid.num_edges(), values.len())?;
        Self::new(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Natural parameters `w_j = log(theta_j / (1 - theta_j))`.
    pub fn logits(&self) -> Vec<f64> {
        self.0.iter().map(|&t| crate::math::logit(t)).collect()
    }

    pub fn all_at_least(&self, bound: f64) -> bool {
        self.0.iter().all(|&t| t >= bound)
    }
}

impl std::ops::Index<usize> for ThetaVector {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

/// One binary configuration of all `d` nodes, bits in `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration(pub Vec<u8>);

impl Configuration {
    pub fn zeros(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn ones(d: usize) -> Self {
        Self(vec![1; d])
    }

    /// Decode the low `d` bits of `mask` (bit `v` is node `v`).
    pub fn from_mask(mask: u64, d: usize) -> Self {
        Self((0..d).map(|v| ((mask >> v) & 1) as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|b| 1 - b).collect())
    }
}

/// `n` observed configurations of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    points: Vec<Configuration>,
}

impl Dataset {
    pub fn new(d: usize, points: Vec<Configuration>) -> Result<Self> {
        for x in &points {
            check_len(d, x.len())?;
            if x.0.iter().any(|&b| b > 1) {
                return Err(MrfError::Domain("configuration bits must be 0 or 1".into()));
            }
        }
        Ok(Self { d, points })
    }

    pub fn num_nodes(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Configuration] {
        &self.points
    }

    /// Concatenate the dataset with itself `times` times.
    pub fn repeated(&self, times: usize) -> Self {
        let mut points = Vec::with_capacity(self.points.len() * times);
        for _ in 0..times {
            points.extend(self.points.iter().cloned());
        }
        Self { d: self.d, points }
    }
}

/// Per-edge agreement counts `alpha_j` over `n` observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SufficientStats {
    pub agree: Vec<usize>,
    pub n: usize,
}

impl SufficientStats {
    /// Empirical agreement rates `alpha_j / n`.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        self.agree.iter().map(|&a| a as f64 / n).collect()
    }

    /// `sum_i log P~(x_i; theta)`, computed from the counts alone.
    pub fn unnormalized_log_likelihood(&self, theta: &[f64]) -> f64 {
        let n = self.n as f64;
        self.agree
            .iter()
            .zip(theta)
            .map(|(&a, &t)| {
                let a = a as f64;
                crate::math::xlogy(a, t) + crate::math::xlogy(n - a, 1.0 - t)
            })
            .sum()
    }
}

/// `log P~(x; theta) = sum_j [ s_j log theta_j + (1 - s_j) log(1 - theta_j) ]`.
pub fn unnormalized_log_prob(x: &Configuration, theta: &ThetaVector, grid: &GridSpec) -> Result<f64> {
    check_len(grid.num_nodes(), x.len())?;
    check_len(grid.num_edges(), theta.len())?;
    Ok(grid
        .agreements(x.bits())
        .zip(theta.as_slice())
        .map(|(agree, &t)| if agree { t.ln() } else { (1.0 - t).ln() })
        .sum())
}

pub fn sufficient_stats(data: &Dataset, grid: &GridSpec) -> Result<SufficientStats> {
    check_len(grid.num_nodes(), data.num_nodes())?;
    let mut agree = vec![0usize; grid.num_edges()];
    for x in data.points() {
        for (count, a) in agree.iter_mut().zip(grid.agreements(x.bits())) {
            *count += a as usize;
        }
    }
    Ok(SufficientStats {
        agree,
        n: data.len(),
    })
}

/// Per-edge log potentials, precomputed once per parameter vector for
/// loops that score many configurations.
#[derive(Debug, Clone)]
pub struct EdgeLogPotentials {
    pub log_agree: Vec<f64>,
    pub log_disagree: Vec<f64>,
}

impl EdgeLogPotentials {
    pub fn new(theta: &[f64]) -> Self {
        Self {
            log_agree: theta.iter().map(|t| t.ln()).collect(),
            log_disagree: theta.iter().map(|t| (1.0 - t).ln()).collect(),
        }
    }

    #[inline]
    pub fn score(&self, grid: &GridSpec, x: &[u8]) -> f64 {
        grid.edges()
            .iter()
            .enumerate()
            .map(|(j, &(u, v))| {
                if x[u] == x[v] {
                    self.log_agree[j]
                } else {
                    self.log_disagree[j]
                }
            })
            .sum()
    }
}
