use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Method};
use super::report::{fmt_opt, write_report, ReportRow};
use crate::baselines::{fit_laplace, PseudoLikelihood, DEFAULT_LAPLACE_SAMPLES};
use crate::error::{MrfError, Result};
use crate::exact::log_partition;
use crate::math::{derive_seed, format_significant};
use crate::mh::{
    posterior_summary, run_chain, ExactLikelihood, LaplaceLikelihood, LikelihoodStrategy, RatioEstimator,
    RatioStrategy, SamplingStrategy,
};
use crate::mle::fit_mle;
use crate::mle_likelihood::build_model_from_stats;
use crate::model::{
    read_mrfdat, sample_dataset, sufficient_stats, write_mrfdat, Dataset, GridSpec, SufficientStats, ThetaVector,
};

// Stream tags for derive_seed, so every random stream is independent.
const STREAM_THETA: u64 = 0;
const STREAM_DATA: u64 = 1;
const STREAM_MLE: u64 = 2;
const STREAM_LAPLACE: u64 = 3;
const STREAM_STRATEGY: u64 = 4;

/// File locations under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn stem(r: usize, n: usize) -> String {
        format!("rep{r:03}_n{n:05}")
    }

    pub fn dataset(&self, r: usize, n: usize) -> PathBuf {
        self.root.join("data").join(format!("{}.mrfdat", Self::stem(r, n)))
    }

    pub fn theta_sidecar(&self, r: usize, n: usize) -> PathBuf {
        self.root.join("data").join(format!("{}.theta.csv", Self::stem(r, n)))
    }

    pub fn mle(&self, r: usize, n: usize) -> PathBuf {
        self.root.join("mle").join(format!("{}.csv", Self::stem(r, n)))
    }

    pub fn chain(&self, label: &str, r: usize, n: usize) -> PathBuf {
        self.root.join("chains").join(format!("{label}_{}.csv", Self::stem(r, n)))
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.csv")
    }

    pub fn skipped(&self) -> PathBuf {
        self.root.join("skipped.csv")
    }

    pub fn runtime(&self) -> PathBuf {
        self.root.join("runtime.csv")
    }

    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.csv")
    }

    pub fn runtime_table(&self) -> PathBuf {
        self.root.join("runtime_table.csv")
    }

    pub fn mean_error_svg(&self) -> PathBuf {
        self.root.join("mean_error.svg")
    }

    pub fn sd_error_svg(&self) -> PathBuf {
        self.root.join("sd_error.svg")
    }
}

pub(crate) fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn grid_of(cfg: &ExperimentConfig) -> Result<GridSpec> {
    GridSpec::new(cfg.grid.rows, cfg.grid.cols)
}

/// Ground truth for replicate `r`, uniform on `(low, high)` per edge.
pub fn true_theta(cfg: &ExperimentConfig, r: usize) -> Result<ThetaVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.theta_gen.seed, &[STREAM_THETA, r as u64]));
    let (lo, hi) = (cfg.theta_gen.low, cfg.theta_gen.high);
    ThetaVector::new((0..cfg.num_params()).map(|_| rng.random_range(lo..hi)).collect())
}

fn cells(cfg: &ExperimentConfig) -> Vec<(usize, usize)> {
    (0..cfg.replicates)
        .flat_map(|r| cfg.n_values.iter().map(move |&n| (r, n)))
        .collect()
}

fn write_theta_csv(path: &Path, header: &str, theta: &ThetaVector) -> Result<()> {
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["param_index", header]).map_err(csv_err)?;
    for (j, t) in theta.as_slice().iter().enumerate() {
        w.write_record([j.to_string(), t.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> MrfError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => MrfError::Io(io),
        other => MrfError::Parse(format!("{other:?}")),
    }
}

fn generate_one(cfg: &ExperimentConfig, layout: &Layout, grid: &GridSpec, r: usize, n: usize) -> Result<()> {
    let truth = true_theta(cfg, r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.theta_gen.seed, &[STREAM_DATA, r as u64, n as u64]));
    let data = sample_dataset(&truth, grid, n, &mut rng, cfg.data.burn_in, cfg.data.spacing)?;
    let path = layout.dataset(r, n);
    create_parent(&path)?;
    write_mrfdat(&path, grid, &data)?;
    write_theta_csv(&layout.theta_sidecar(r, n), "true_theta", &truth)
}

/// Write every dataset and its true-theta sidecar.
pub fn cmd_generate(cfg: &ExperimentConfig, layout: &Layout) -> Result<usize> {
    let grid = grid_of(cfg)?;
    let todo = cells(cfg);
    todo.par_iter()
        .map(|&(r, n)| generate_one(cfg, layout, &grid, r, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(todo.len())
}

struct Loaded {
    r: usize,
    n: usize,
    data: Dataset,
    stats: SufficientStats,
    truth: ThetaVector,
}

fn load(cfg: &ExperimentConfig, layout: &Layout, grid: &GridSpec, r: usize, n: usize) -> Result<Loaded> {
    let path = layout.dataset(r, n);
    if !path.exists() {
        generate_one(cfg, layout, grid, r, n)?;
    }
    let (file_grid, data) = read_mrfdat(&path)?;
    if file_grid.rows() != grid.rows() || file_grid.cols() != grid.cols() || data.len() != n {
        return Err(MrfError::Parse(format!(
            "{} does not match the configured grid and n",
            path.display()
        )));
    }
    let stats = sufficient_stats(&data, grid)?;
    Ok(Loaded {
        r,
        n,
        data,
        stats,
        truth: true_theta(cfg, r)?,
    })
}

fn load_all(cfg: &ExperimentConfig, layout: &Layout, grid: &GridSpec) -> Result<Vec<Loaded>> {
    cells(cfg)
        .par_iter()
        .map(|&(r, n)| load(cfg, layout, grid, r, n))
        .collect()
}

fn mle_for(cfg: &ExperimentConfig, grid: &GridSpec, d: &Loaded) -> Result<ThetaVector> {
    let seed = derive_seed(cfg.theta_gen.seed, &[STREAM_MLE, d.r as u64, d.n as u64]);
    Ok(fit_mle(&d.data, grid, &cfg.cd.with_seed(seed))?.theta_hat)
}

/// Fit the CD estimate for every dataset and write `mle/*.csv`.
pub fn cmd_fit_mle(cfg: &ExperimentConfig, layout: &Layout) -> Result<usize> {
    let grid = grid_of(cfg)?;
    let loaded = load_all(cfg, layout, &grid)?;
    loaded
        .par_iter()
        .map(|d| write_theta_csv(&layout.mle(d.r, d.n), "theta_hat", &mle_for(cfg, &grid, d)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(loaded.len())
}

/// Print `replicate,log_z` for every replicate's true theta.
pub fn cmd_exact_z<W: Write>(cfg: &ExperimentConfig, out: &mut W) -> Result<()> {
    let grid = grid_of(cfg)?;
    writeln!(out, "replicate,log_z")?;
    for r in 0..cfg.replicates {
        let z = log_partition(&true_theta(cfg, r)?, &grid)?;
        writeln!(out, "{r},{}", format_significant(z.log_z, 12))?;
    }
    Ok(())
}

struct Task {
    dataset: usize,
    method: Method,
    rho: Option<f64>,
}

struct ChainResult {
    mean: Vec<f64>,
    sd: Vec<f64>,
    acceptance: f64,
    chain_ms: f64,
    setup_ms: f64,
    warnings: usize,
}

enum Outcome {
    Done(ChainResult),
    Skipped(String),
}

fn method_index(m: Method) -> u64 {
    Method::ALL.iter().position(|&x| x == m).expect("listed method") as u64
}

fn build_strategy(
    cfg: &ExperimentConfig,
    grid: &GridSpec,
    d: &Loaded,
    mle: Option<&ThetaVector>,
    task: &Task,
) -> Result<Box<dyn RatioStrategy>> {
    let name = task.method.as_str();
    let need_mle = || mle.ok_or_else(|| MrfError::Domain("missing MLE".into()));
    let seed = derive_seed(
        cfg.mh.seed,
        &[
            STREAM_STRATEGY,
            d.r as u64,
            d.n as u64,
            method_index(task.method),
            task.rho.unwrap_or(0.0).to_bits(),
        ],
    );
    let sampling = |est| -> Result<Box<dyn RatioStrategy>> {
        Ok(Box::new(SamplingStrategy::new(
            name,
            d.stats.clone(),
            grid.clone(),
            est,
            cfg.particles.into(),
            seed,
        )?))
    };
    Ok(match task.method {
        Method::Exact => Box::new(LikelihoodStrategy::new(
            name,
            ExactLikelihood::new(d.stats.clone(), grid.clone())?,
        )),
        Method::MleL => {
            let model = build_model_from_stats(&d.stats, need_mle()?, task.rho.unwrap_or(0.0))?;
            Box::new(LikelihoodStrategy::new(name, model))
        }
        Method::PseudoL => Box::new(LikelihoodStrategy::new(name, PseudoLikelihood::new(&d.data, grid)?)),
        Method::LaplaceL => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                cfg.theta_gen.seed,
                &[STREAM_LAPLACE, d.r as u64, d.n as u64],
            ));
            let lm = fit_laplace(need_mle()?, grid, DEFAULT_LAPLACE_SAMPLES, &mut rng)?;
            Box::new(LikelihoodStrategy::new(name, LaplaceLikelihood::new(lm, &d.stats)?))
        }
        Method::IsGeometric => sampling(RatioEstimator::IsGeometric)?,
        Method::AuxVar => sampling(RatioEstimator::AuxVar {
            theta_hat: need_mle()?.clone(),
        })?,
        Method::Exch => sampling(RatioEstimator::Exchange)?,
        Method::PersistMc => sampling(RatioEstimator::Persistent)?,
    })
}

fn series_label(method: Method, rho: Option<f64>) -> String {
    match rho {
        Some(r) => format!("{method}_rho{r}"),
        None => method.to_string(),
    }
}

fn run_task(
    cfg: &ExperimentConfig,
    layout: &Layout,
    grid: &GridSpec,
    d: &Loaded,
    mle: Option<&ThetaVector>,
    task: &Task,
) -> Result<Outcome> {
    let setup_start = Instant::now();
    let mut strategy = match build_strategy(cfg, grid, d, mle, task) {
        Ok(s) => s,
        Err(e @ (MrfError::TooLarge { .. } | MrfError::Resolution(_))) => return Ok(Outcome::Skipped(e.to_string())),
        Err(e) => return Err(e),
    };
    let setup_ms = setup_start.elapsed().as_secs_f64() * 1e3;
    let mh = crate::mh::MhConfig {
        seed: derive_seed(cfg.mh.seed, &[d.r as u64, d.n as u64]),
        sigma_q2: cfg.sigma_q2_for(d.n),
        ..cfg.mh.clone()
    };
    let theta0 = mh.default_start(grid.num_edges())?;
    let ps = run_chain(&mh, &mut strategy, &theta0)?;
    if ps.never_moved() {
        eprintln!(
            "warning: {} (replicate {}, n {}) accepted no proposals",
            series_label(task.method, task.rho),
            d.r,
            d.n
        );
    }
    if cfg.chain_dump {
        let path = layout.chain(&series_label(task.method, task.rho), d.r, d.n);
        create_parent(&path)?;
        ps.write_csv(BufWriter::new(fs::File::create(path)?))?;
    }
    let (mean, sd) = posterior_summary(&ps)?;
    Ok(Outcome::Done(ChainResult {
        mean,
        sd,
        acceptance: ps.acceptance_rate(),
        chain_ms: ps.runtime_ms,
        setup_ms,
        warnings: ps.nonfinite_warnings,
    }))
}

/// Summary of a `posterior` run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PosteriorRun {
    pub chains: usize,
    pub skipped: usize,
    pub rows: usize,
}

/// Run every (dataset, method, rho) chain and write the report files.
pub fn cmd_posterior(cfg: &ExperimentConfig, layout: &Layout) -> Result<PosteriorRun> {
    let grid = grid_of(cfg)?;
    let loaded = if cfg.methods.is_empty() {
        Vec::new()
    } else {
        load_all(cfg, layout, &grid)?
    };
    let need_mle = cfg.methods.iter().any(|m| m.needs_mle());
    let mles: Vec<Option<ThetaVector>> = loaded
        .par_iter()
        .map(|d| need_mle.then(|| mle_for(cfg, &grid, d)).transpose())
        .collect::<Result<_>>()?;

    let mut tasks = Vec::new();
    for dataset in 0..loaded.len() {
        for &method in &cfg.methods {
            if method == Method::MleL {
                for &rho in &cfg.copula_rho {
                    tasks.push(Task { dataset, method, rho: Some(rho) });
                }
            } else {
                tasks.push(Task { dataset, method, rho: None });
            }
        }
    }
    let outcomes: Vec<Outcome> = tasks
        .par_iter()
        .map(|t| run_task(cfg, layout, &grid, &loaded[t.dataset], mles[t.dataset].as_ref(), t))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut runtime = Vec::new();
    for (task, outcome) in tasks.iter().zip(&outcomes) {
        let d = &loaded[task.dataset];
        let base = ReportRow {
            method: task.method.to_string(),
            replicate: d.r,
            n: d.n,
            rho: task.rho,
            ..ReportRow::default()
        };
        match outcome {
            Outcome::Skipped(reason) => {
                rows.push(base.clone());
                skipped.push((base, reason.clone()));
            }
            Outcome::Done(res) => {
                let reference = tasks.iter().zip(&outcomes).find_map(|(t, o)| match o {
                    Outcome::Done(r) if t.dataset == task.dataset && t.method == Method::Exact => Some(&r.mean),
                    _ => None,
                });
                for j in 0..res.mean.len() {
                    rows.push(ReportRow {
                        param_index: Some(j),
                        true_theta: Some(d.truth[j]),
                        post_mean: Some(res.mean[j]),
                        post_sd: Some(res.sd[j]),
                        ref_post_mean: reference.map(|m| m[j]),
                        runtime_ms: cfg.record_runtime.then_some(res.chain_ms),
                        acceptance_rate: Some(res.acceptance),
                        ..base.clone()
                    });
                }
                runtime.push((base, res));
            }
        }
    }

    fs::create_dir_all(layout.root())?;
    write_report(BufWriter::new(fs::File::create(layout.report())?), &rows)?;

    let mut w = csv::Writer::from_path(layout.skipped()).map_err(csv_err)?;
    w.write_record(["method", "replicate", "n", "rho", "reason"]).map_err(csv_err)?;
    for (row, reason) in &skipped {
        w.write_record([
            row.method.clone(),
            row.replicate.to_string(),
            row.n.to_string(),
            fmt_opt(row.rho),
            reason.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(layout.runtime()).map_err(csv_err)?;
    w.write_record([
        "method",
        "replicate",
        "n",
        "rho",
        "setup_ms",
        "chain_ms",
        "steps",
        "ms_per_step",
        "acceptance_rate",
        "nonfinite_warnings",
    ])
    .map_err(csv_err)?;
    for (row, res) in &runtime {
        let timing = |v: f64| if cfg.record_runtime { v.to_string() } else { String::new() };
        w.write_record([
            row.method.clone(),
            row.replicate.to_string(),
            row.n.to_string(),
            fmt_opt(row.rho),
            timing(res.setup_ms),
            timing(res.chain_ms),
            cfg.mh.steps.to_string(),
            timing(res.chain_ms / cfg.mh.steps as f64),
            res.acceptance.to_string(),
            res.warnings.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;

    Ok(PosteriorRun {
        chains: runtime.len(),
        skipped: skipped.len(),
        rows: rows.len(),
    })
}
