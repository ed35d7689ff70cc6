use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{MrfError, Result};
use crate::mh::{MhConfig, ParticleSettings};
use crate::mle::CdConfig;
use crate::model::{DEFAULT_BURN_IN_SWEEPS, DEFAULT_SPACING_SWEEPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "mle-L")]
    MleL,
    #[serde(rename = "pseudo-L")]
    PseudoL,
    #[serde(rename = "laplace-L")]
    LaplaceL,
    #[serde(rename = "is-geometric")]
    IsGeometric,
    #[serde(rename = "auxvar")]
    AuxVar,
    #[serde(rename = "exch")]
    Exch,
    #[serde(rename = "persist-mc")]
    PersistMc,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Exact,
        Method::MleL,
        Method::PseudoL,
        Method::LaplaceL,
        Method::IsGeometric,
        Method::AuxVar,
        Method::Exch,
        Method::PersistMc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MleL => "mle-L",
            Method::PseudoL => "pseudo-L",
            Method::LaplaceL => "laplace-L",
            Method::IsGeometric => "is-geometric",
            Method::AuxVar => "auxvar",
            Method::Exch => "exch",
            Method::PersistMc => "persist-mc",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    /// Whether the method needs the CD estimate of theta.
    pub fn needs_mle(self) -> bool {
        matches!(self, Method::MleL | Method::LaplaceL | Method::AuxVar)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaGen {
    pub low: f64,
    pub high: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParticleConfig {
    pub count: usize,
    pub advance_sweeps: usize,
    pub k: usize,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        let d = ParticleSettings::default();
        Self {
            count: d.count,
            advance_sweeps: d.advance_sweeps,
            k: d.k,
        }
    }
}

impl From<ParticleConfig> for ParticleSettings {
    fn from(c: ParticleConfig) -> Self {
        Self {
            count: c.count,
            advance_sweeps: c.advance_sweeps,
            k: c.k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub burn_in: usize,
    pub spacing: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            burn_in: DEFAULT_BURN_IN_SWEEPS,
            spacing: DEFAULT_SPACING_SWEEPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CdSettings {
    pub k: usize,
    pub step_size: f64,
    pub max_iters: usize,
    pub num_particles: usize,
    pub persistent: bool,
    pub grad_tol: f64,
}

impl Default for CdSettings {
    fn default() -> Self {
        let d = CdConfig::default();
        Self {
            k: d.k,
            step_size: d.step_size,
            max_iters: d.max_iters,
            num_particles: d.num_particles,
            persistent: d.persistent,
            grad_tol: d.grad_tol,
        }
    }
}

impl CdSettings {
    pub fn with_seed(&self, seed: u64) -> CdConfig {
        CdConfig {
            k: self.k,
            step_size: self.step_size,
            max_iters: self.max_iters,
            num_particles: self.num_particles,
            persistent: self.persistent,
            grad_tol: self.grad_tol,
            seed,
        }
    }
}

fn default_rho() -> Vec<f64> {
    vec![0.0]
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub theta_gen: ThetaGen,
    pub n_values: Vec<usize>,
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default = "default_rho")]
    pub copula_rho: Vec<f64>,
    #[serde(default)]
    pub mh: MhConfig,
    #[serde(default)]
    pub particles: ParticleConfig,
    pub replicates: usize,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub cd: CdSettings,
    /// Wall-clock columns are left empty when false, making reports
    /// byte-reproducible.
    #[serde(default = "default_true")]
    pub record_runtime: bool,
    /// Write retained chains under `out_dir/chains`.
    #[serde(default)]
    pub chain_dump: bool,
    /// When set, a dataset of size `n` uses proposal variance
    /// `sigma_q2_times_n / n` instead of `mh.sigma_q2`. The posterior
    /// narrows like `1/n`, so this keeps acceptance rates comparable across
    /// sample sizes.
    #[serde(default)]
    pub sigma_q2_times_n: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| MrfError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        crate::model::GridSpec::new(self.grid.rows, self.grid.cols)?;
        let tg = &self.theta_gen;
        if !(0.0 < tg.low && tg.low < tg.high && tg.high < 1.0) {
            return Err(MrfError::Domain(format!(
                "theta_gen interval ({}, {}) must lie inside (0, 1) with low < high",
                tg.low, tg.high
            )));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(MrfError::Domain("n_values must be a non-empty list of positive integers".into()));
        }
        if self.replicates == 0 {
            return Err(MrfError::Domain("replicates must be positive".into()));
        }
        let p = self.grid.rows * (self.grid.cols - 1) + (self.grid.rows - 1) * self.grid.cols;
        for &rho in &self.copula_rho {
            crate::mle_likelihood::CopulaSpec::new(rho, p)?;
        }
        if self.copula_rho.is_empty() && self.methods.contains(&Method::MleL) {
            return Err(MrfError::Domain("mle-L needs at least one copula_rho".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for m in &self.methods {
            if !seen.insert(m) {
                return Err(MrfError::Domain(format!("method {m} listed twice")));
            }
        }
        self.mh.validate()?;
        if let Some(v) = self.sigma_q2_times_n {
            if !(v.is_finite() && v > 0.0) {
                return Err(MrfError::Domain(format!("sigma_q2_times_n must be positive, got {v}")));
            }
        }
        let ps = &self.particles;
        if ps.count == 0 || ps.k == 0 {
            return Err(MrfError::Domain("particles.count and particles.k must be positive".into()));
        }
        self.cd.with_seed(0).validate()?;
        Ok(())
    }

    /// Proposal variance for a dataset of size `n`.
    pub fn sigma_q2_for(&self, n: usize) -> f64 {
        match self.sigma_q2_times_n {
            Some(v) => v / n as f64,
            None => self.mh.sigma_q2,
        }
    }

    pub fn num_params(&self) -> usize {
        self.grid.rows * (self.grid.cols - 1) + (self.grid.rows - 1) * self.grid.cols
    }
}
