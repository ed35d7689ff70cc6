//! Independent oracles shared by the integration tests. Everything here is
//! computed by plain enumeration, without the library's exact module.
#![allow(dead_code)]

use mrflab::GridSpec;

pub struct Enumeration {
    /// Agreement indicators per state, `states x p`.
    pub stats: Vec<Vec<f64>>,
    pub log_weights: Vec<f64>,
}

impl Enumeration {
    pub fn new(grid: &GridSpec, theta: &[f64]) -> Self {
        let d = grid.num_nodes();
        assert!(d <= 20);
        let mut stats = Vec::with_capacity(1 << d);
        let mut log_weights = Vec::with_capacity(1 << d);
        for mask in 0u64..(1 << d) {
            let s: Vec<f64> = grid
                .edges()
                .iter()
                .map(|&(u, v)| f64::from(((mask >> u) & 1) == ((mask >> v) & 1)))
                .collect();
            let lw = s
                .iter()
                .zip(theta)
                .map(|(&a, &t)| if a == 1.0 { t.ln() } else { (1.0 - t).ln() })
                .sum();
            stats.push(s);
            log_weights.push(lw);
        }
        Self { stats, log_weights }
    }

    pub fn log_z(&self) -> f64 {
        let m = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + self.log_weights.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
    }

    pub fn probs(&self) -> Vec<f64> {
        let lz = self.log_z();
        self.log_weights.iter().map(|l| (l - lz).exp()).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let p = self.stats[0].len();
        let mut m = vec![0.0; p];
        for (s, pr) in self.stats.iter().zip(self.probs()) {
            for j in 0..p {
                m[j] += pr * s[j];
            }
        }
        m
    }

    pub fn cov(&self) -> Vec<Vec<f64>> {
        let p = self.stats[0].len();
        let mean = self.mean();
        let mut c = vec![vec![0.0; p]; p];
        for (s, pr) in self.stats.iter().zip(self.probs()) {
            for j in 0..p {
                for k in 0..p {
                    c[j][k] += pr * (s[j] - mean[j]) * (s[k] - mean[k]);
                }
            }
        }
        c
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Exact log-likelihood `sum_j [alpha_j log t_j + (n-alpha_j) log(1-t_j)] - n log Z`.
pub fn exact_log_likelihood(grid: &GridSpec, agree: &[usize], n: usize, theta: &[f64]) -> f64 {
    let un: f64 = agree
        .iter()
        .zip(theta)
        .map(|(&a, &t)| a as f64 * t.ln() + (n - a) as f64 * (1.0 - t).ln())
        .sum();
    un - n as f64 * Enumeration::new(grid, theta).log_z()
}

/// Exact MLE by gradient ascent in logit coordinates with enumerated
/// moments, from the given start.
pub fn exact_mle_from(grid: &GridSpec, rate: &[f64], start: &[f64]) -> Vec<f64> {
    let mut w: Vec<f64> = start.iter().map(|&t| logit(t)).collect();
    for _ in 0..20_000 {
        let theta: Vec<f64> = w.iter().map(|&x| sigmoid(x)).collect();
        let mean = Enumeration::new(grid, &theta).mean();
        let mut norm = 0.0;
        for j in 0..w.len() {
            let g = rate[j] - mean[j];
            w[j] += 2.0 * g;
            norm += g * g;
        }
        if norm.sqrt() < 1e-12 {
            break;
        }
    }
    w.iter().map(|&x| sigmoid(x)).collect()
}

pub fn exact_mle(grid: &GridSpec, rate: &[f64]) -> Vec<f64> {
    let start: Vec<f64> = rate.iter().map(|r| r.clamp(0.05, 0.95)).collect();
    exact_mle_from(grid, rate, &start)
}

/// Draw an index from a discrete distribution by inversion.
pub fn draw_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}
