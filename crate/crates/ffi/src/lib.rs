//! C ABI over `mrflab`.
//!
//! Objects are opaque handles created by `*_new`/`*_sample`/... functions
//! and released with the matching `*_free`. Every fallible call returns a
//! [`MrflabStatus`]; on failure [`mrflab_last_error`] describes the problem
//! for the calling thread. Arrays are passed as pointer plus length, and
//! `theta` arrays hold one value in (0, 1) per grid edge.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mrflab::baselines::{fit_laplace, PseudoLikelihood, DEFAULT_LAPLACE_SAMPLES};
use mrflab::exact::log_partition;
use mrflab::mh::{
    posterior_summary, run_chain, ExactLikelihood, LaplaceLikelihood, LikelihoodStrategy, LogLikelihood,
    MhConfig, PosteriorSamples,
};
use mrflab::mle::{fit_mle, CdConfig};
use mrflab::mle_likelihood::{build_model, MleLikelihoodModel};
use mrflab::model::{build_grid, read_mrfdat, sample_dataset, sufficient_stats, write_mrfdat};
use mrflab::{Configuration, Dataset, GridSpec, MrfError, ThetaVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrflabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidGrid = 2,
    DimensionMismatch = 3,
    Domain = 4,
    TooLarge = 5,
    Empty = 6,
    Resolution = 7,
    Correlation = 8,
    Parse = 9,
    Io = 10,
    /// A Rust panic was caught at the boundary.
    Panic = 11,
}

impl From<&MrfError> for MrflabStatus {
    fn from(e: &MrfError) -> Self {
        match e {
            MrfError::InvalidGrid(_) => Self::InvalidGrid,
            MrfError::DimensionMismatch { .. } => Self::DimensionMismatch,
            MrfError::Domain(_) => Self::Domain,
            MrfError::TooLarge { .. } => Self::TooLarge,
            MrfError::Empty(_) => Self::Empty,
            MrfError::Resolution(_) => Self::Resolution,
            MrfError::Correlation { .. } => Self::Correlation,
            MrfError::Parse(_) => Self::Parse,
            MrfError::Io(_) => Self::Io,
        }
    }
}

struct Failure(MrflabStatus, String);

impl From<MrfError> for Failure {
    fn from(e: MrfError) -> Self {
        Failure(MrflabStatus::from(&e), e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> FfiResult<()>>(f: F) -> MrflabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MrflabStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            MrflabStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(MrflabStatus::NullPointer, format!("{what} is null"))
}

unsafe fn obj<'a, T>(ptr: *const T, what: &str) -> FfiResult<&'a T> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn obj_mut<'a, T>(ptr: *mut T, what: &str) -> FfiResult<&'a mut T> {
    ptr.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        Ok(&[])
    } else if ptr.is_null() {
        Err(null(what))
    } else {
        Ok(std::slice::from_raw_parts(ptr, len))
    }
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, what: &str) -> FfiResult<&'a mut [T]> {
    if len == 0 {
        Ok(&mut [])
    } else if ptr.is_null() {
        Err(null(what))
    } else {
        Ok(std::slice::from_raw_parts_mut(ptr, len))
    }
}

unsafe fn path<'a>(ptr: *const c_char) -> FfiResult<&'a Path> {
    if ptr.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map(Path::new)
        .map_err(|_| Failure(MrflabStatus::Parse, "path is not valid UTF-8".into()))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn theta_for(g: &GridSpec, values: &[f64]) -> FfiResult<ThetaVector> {
    Ok(ThetaVector::for_grid(values.to_vec(), g)?)
}

fn free<T>(ptr: *mut T) {
    if !ptr.is_null() {
        drop(unsafe { Box::from_raw(ptr) });
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mrflab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failure on this thread, or NULL if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mrflab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Rectangular grid with 4-neighbour edges.
pub struct MrflabGrid(GridSpec);

/// Observations on a grid, one byte per node.
pub struct MrflabDataset(Dataset);

/// A likelihood (exact or one of the approximations) bound to a dataset.
pub struct MrflabLikelihood {
    inner: Likelihood,
    p: usize,
}

/// Retained draws of a Metropolis-Hastings chain.
pub struct MrflabSamples(PosteriorSamples);

enum Likelihood {
    Exact(ExactLikelihood),
    Mle(MleLikelihoodModel),
    Pseudo(PseudoLikelihood),
    Laplace(LaplaceLikelihood),
}

impl Likelihood {
    fn name(&self) -> &'static str {
        match self {
            Likelihood::Exact(_) => "exact",
            Likelihood::Mle(_) => "mle-L",
            Likelihood::Pseudo(_) => "pseudo-L",
            Likelihood::Laplace(_) => "laplace-L",
        }
    }
}

impl LogLikelihood for Likelihood {
    fn log_likelihood(&mut self, theta: &[f64]) -> f64 {
        match self {
            Likelihood::Exact(l) => l.log_likelihood(theta),
            Likelihood::Mle(l) => l.log_likelihood(theta),
            Likelihood::Pseudo(l) => l.log_likelihood(theta),
            Likelihood::Laplace(l) => l.log_likelihood(theta),
        }
    }
}

struct Borrowed<'a>(&'a mut Likelihood);

impl LogLikelihood for Borrowed<'_> {
    fn log_likelihood(&mut self, theta: &[f64]) -> f64 {
        self.0.log_likelihood(theta)
    }
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn mrflab_grid_new(rows: usize, cols: usize, out: *mut *mut MrflabGrid) -> MrflabStatus {
    guard(|| put(out, MrflabGrid(build_grid(rows, cols)?)))
}

/// # Safety
/// `grid` must come from `mrflab_grid_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mrflab_grid_free(grid: *mut MrflabGrid) {
    free(grid)
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn mrflab_grid_num_nodes(grid: *const MrflabGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.num_nodes())
}

/// Number of edges (parameters), or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn mrflab_grid_num_edges(grid: *const MrflabGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.num_edges())
}

/// Endpoints of edge `index`; nodes are numbered row-major.
///
/// # Safety
/// `grid` must be a live grid handle; `u` and `v` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mrflab_grid_edge(
    grid: *const MrflabGrid,
    index: usize,
    u: *mut usize,
    v: *mut usize,
) -> MrflabStatus {
    guard(|| {
        let g = &obj(grid, "grid")?.0;
        let &(a, b) = g.edges().get(index).ok_or_else(|| {
            Failure(MrflabStatus::Domain, format!("edge {index} out of range ({} edges)", g.num_edges()))
        })?;
        *obj_mut(u, "u")? = a;
        *obj_mut(v, "v")? = b;
        Ok(())
    })
}

/// Exact `log Z(theta)`.
///
/// # Safety
/// `grid` must be a live handle, `theta` point to `p` doubles, `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn mrflab_log_partition(
    grid: *const MrflabGrid,
    theta: *const f64,
    p: usize,
    out: *mut f64,
) -> MrflabStatus {
    guard(|| {
        let g = &obj(grid, "grid")?.0;
        let t = theta_for(g, slice(theta, p, "theta")?)?;
        *obj_mut(out, "out")? = log_partition(&t, g)?.log_z;
        Ok(())
    })
}

/// Draw `n` observations by Gibbs sampling at `theta`.
///
/// # Safety
/// `grid` must be a live handle, `theta` point to `p` doubles, `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn mrflab_dataset_sample(
    grid: *const MrflabGrid,
    theta: *const f64,
    p: usize,
    n: usize,
    seed: u64,
    burn_in_sweeps: usize,
    spacing_sweeps: usize,
    out: *mut *mut MrflabDataset,
) -> MrflabStatus {
    guard(|| {
        let g = &obj(grid, "grid")?.0;
        let t = theta_for(g, slice(theta, p, "theta")?)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = sample_dataset(&t, g, n, &mut rng, burn_in_sweeps, spacing_sweeps)?;
        put(out, MrflabDataset(data))
    })
}

/// Build a dataset from `n` row-major observations of `num_nodes` bytes
/// each, every byte 0 or 1.
///
/// # Safety
/// `grid` must be a live handle, `bits` point to `n * num_nodes` bytes.
#[no_mangle]
pub unsafe extern "C" fn mrflab_dataset_from_bits(
    grid: *const MrflabGrid,
    bits: *const u8,
    n: usize,
    out: *mut *mut MrflabDataset,
) -> MrflabStatus {
    guard(|| {
        let d = obj(grid, "grid")?.0.num_nodes();
        let raw = slice(bits, n * d, "bits")?;
        if let Some(b) = raw.iter().find(|&&b| b > 1) {
            return Err(Failure(MrflabStatus::Domain, format!("node value {b} is not 0 or 1")));
        }
        let points = raw.chunks(d).map(|c| Configuration(c.to_vec())).collect();
        put(out, MrflabDataset(Dataset::new(d, points)?))
    })
}

/// Read a `.mrfdat` file; returns both its grid and its observations.
///
/// # Safety
/// `file` must be a NUL-terminated path; the output slots must be valid.
#[no_mangle]
pub unsafe extern "C" fn mrflab_dataset_read(
    file: *const c_char,
    grid_out: *mut *mut MrflabGrid,
    out: *mut *mut MrflabDataset,
) -> MrflabStatus {
    guard(|| {
        if grid_out.is_null() || out.is_null() {
            return Err(null("output handle"));
        }
        let (g, data) = read_mrfdat(path(file)?)?;
        put(grid_out, MrflabGrid(g))?;
        put(out, MrflabDataset(data))
    })
}

/// # Safety
/// `file` must be a NUL-terminated path; handles must be live.
#[no_mangle]
pub unsafe extern "C" fn mrflab_dataset_write(
    file: *const c_char,
    grid: *const MrflabGrid,
    data: *const MrflabDataset,
) -> MrflabStatus {
    guard(|| Ok(write_mrfdat(path(file)?, &obj(grid, "grid")?.0, &obj(data, "dataset")?.0)?))
}

/// Number of observations, or 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn mrflab_dataset_len(data: *const MrflabDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.len())
}

/// Per-edge agreement counts, written to `agree[0..p]`.
///
/// # Safety
/// Handles must be live and `agree` point to `p` writable elements.
#[no_mangle]
pub unsafe extern "C" fn mrflab_dataset_agreements(
    data: *const MrflabDataset,
    grid: *const MrflabGrid,
    agree: *mut usize,
    p: usize,
) -> MrflabStatus {
    guard(|| {
        let stats = sufficient_stats(&obj(data, "dataset")?.0, &obj(grid, "grid")?.0)?;
        let out = slice_mut(agree, p, "agree")?;
        if out.len() != stats.agree.len() {
            return Err(MrfError::DimensionMismatch { expected: stats.agree.len(), found: p }.into());
        }
        out.copy_from_slice(&stats.agree);
        Ok(())
    })
}

/// # Safety
/// `data` must come from a dataset constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mrflab_dataset_free(data: *mut MrflabDataset) {
    free(data)
}

/// Contrastive-divergence settings.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MrflabCdConfig {
    pub k: usize,
    pub step_size: f64,
    pub max_iters: usize,
    pub num_particles: usize,
    pub persistent: bool,
    pub grad_tol: f64,
    pub seed: u64,
}

impl From<MrflabCdConfig> for CdConfig {
    fn from(c: MrflabCdConfig) -> Self {
        CdConfig {
            k: c.k,
            step_size: c.step_size,
            max_iters: c.max_iters,
            num_particles: c.num_particles,
            persistent: c.persistent,
            grad_tol: c.grad_tol,
            seed: c.seed,
        }
    }
}

#[no_mangle]
pub extern "C" fn mrflab_cd_config_default() -> MrflabCdConfig {
    let d = CdConfig::default();
    MrflabCdConfig {
        k: d.k,
        step_size: d.step_size,
        max_iters: d.max_iters,
        num_particles: d.num_particles,
        persistent: d.persistent,
        grad_tol: d.grad_tol,
        seed: d.seed,
    }
}

/// Diagnostics of a contrastive-divergence fit.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MrflabMleInfo {
    pub grad_norm: f64,
    pub iters_used: usize,
    pub converged: bool,
}

/// Fit theta by contrastive divergence; writes `p` estimates to `theta_out`.
/// `config` and `info` may be null (defaults / not reported).
///
/// # Safety
/// Handles must be live, `theta_out` point to `p` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mrflab_fit_mle(
    data: *const MrflabDataset,
    grid: *const MrflabGrid,
    config: *const MrflabCdConfig,
    theta_out: *mut f64,
    p: usize,
    info: *mut MrflabMleInfo,
) -> MrflabStatus {
    guard(|| {
        let g = &obj(grid, "grid")?.0;
        let cfg: CdConfig = config.as_ref().map(|c| (*c).into()).unwrap_or_default();
        let out = slice_mut(theta_out, p, "theta_out")?;
        if p != g.num_edges() {
            return Err(MrfError::DimensionMismatch { expected: g.num_edges(), found: p }.into());
        }
        let res = fit_mle(&obj(data, "dataset")?.0, g, &cfg)?;
        out.copy_from_slice(res.theta_hat.as_slice());
        if let Some(i) = info.as_mut() {
            *i = MrflabMleInfo {
                grad_norm: res.grad_norm,
                iters_used: res.iters_used,
                converged: res.converged,
            };
        }
        Ok(())
    })
}

unsafe fn make_likelihood(out: *mut *mut MrflabLikelihood, p: usize, inner: Likelihood) -> FfiResult<()> {
    put(out, MrflabLikelihood { inner, p })
}

/// Exact likelihood via the transfer-window recursion.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mrflab_likelihood_exact(
    data: *const MrflabDataset,
    grid: *const MrflabGrid,
    out: *mut *mut MrflabLikelihood,
) -> MrflabStatus {
    guard(|| {
        let g = &obj(grid, "grid")?.0;
        let stats = sufficient_stats(&obj(data, "dataset")?.0, g)?;
        make_likelihood(out, g.num_edges(), Likelihood::Exact(ExactLikelihood::new(stats, g.clone())?))
    })
}

/// MLE-induced likelihood with exchangeable Gaussian copula correlation
/// `rho` (0 for independent marginals).
///
/// # Safety
/// Handles must be live, `theta_hat` point to `p` doubles, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mrflab_likelihood_mle(
    data: *const MrflabDataset,
    grid: *const MrflabGrid,
    theta_hat: *const f64,
    p: usize,
    rho: f64,
    out: *mut *mut MrflabLikelihood,
) -> MrflabStatus {
    guard(|| {
        let g = &obj(grid, "grid")?.0;
        let t = theta_for(g, slice(theta_hat, p, "theta_hat")?)?;
        let model = build_model(&obj(data, "dataset")?.0, &t, g, rho)?;
        make_likelihood(out, p, Likelihood::Mle(model))
    })
}

/// Pseudolikelihood.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mrflab_likelihood_pseudo(
    data: *const MrflabDataset,
    grid: *const MrflabGrid,
    out: *mut *mut MrflabLikelihood,
) -> MrflabStatus {
    guard(|| {
        let g = &obj(grid, "grid")?.0;
        let pl = PseudoLikelihood::new(&obj(data, "dataset")?.0, g)?;
        make_likelihood(out, g.num_edges(), Likelihood::Pseudo(pl))
    })
}

/// Laplace (quadratic) surrogate around `theta_hat`. Moments are exact on
/// enumerable grids and sampled with `seed` otherwise.
///
/// # Safety
/// Handles must be live, `theta_hat` point to `p` doubles, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mrflab_likelihood_laplace(
    data: *const MrflabDataset,
    grid: *const MrflabGrid,
    theta_hat: *const f64,
    p: usize,
    seed: u64,
    out: *mut *mut MrflabLikelihood,
) -> MrflabStatus {
    guard(|| {
        let g = &obj(grid, "grid")?.0;
        let t = theta_for(g, slice(theta_hat, p, "theta_hat")?)?;
        let stats = sufficient_stats(&obj(data, "dataset")?.0, g)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lm = fit_laplace(&t, g, DEFAULT_LAPLACE_SAMPLES, &mut rng)?;
        make_likelihood(out, p, Likelihood::Laplace(LaplaceLikelihood::new(lm, &stats)?))
    })
}

/// Log-likelihood at `theta`.
///
/// # Safety
/// `lik` must be live, `theta` point to `p` doubles, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mrflab_likelihood_eval(
    lik: *mut MrflabLikelihood,
    theta: *const f64,
    p: usize,
    out: *mut f64,
) -> MrflabStatus {
    guard(|| {
        let l = obj_mut(lik, "likelihood")?;
        let t = ThetaVector::new(slice(theta, p, "theta")?.to_vec())?;
        if t.len() != l.p {
            return Err(MrfError::DimensionMismatch { expected: l.p, found: p }.into());
        }
        *obj_mut(out, "out")? = l.inner.log_likelihood(t.as_slice());
        Ok(())
    })
}

/// Number of parameters, or 0 for a null handle.
///
/// # Safety
/// `lik` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn mrflab_likelihood_num_params(lik: *const MrflabLikelihood) -> usize {
    lik.as_ref().map_or(0, |l| l.p)
}

/// # Safety
/// `lik` must come from a likelihood constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mrflab_likelihood_free(lik: *mut MrflabLikelihood) {
    free(lik)
}

/// Random-walk Metropolis-Hastings settings.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MrflabMhConfig {
    pub steps: usize,
    /// Proposal variance per coordinate.
    pub sigma_q2: f64,
    pub prior_low: f64,
    pub prior_high: f64,
    pub burn_in_fraction: f64,
    pub thin: usize,
    pub seed: u64,
}

impl From<MrflabMhConfig> for MhConfig {
    fn from(c: MrflabMhConfig) -> Self {
        MhConfig {
            steps: c.steps,
            sigma_q2: c.sigma_q2,
            prior_low: c.prior_low,
            prior_high: c.prior_high,
            burn_in_fraction: c.burn_in_fraction,
            thin: c.thin,
            seed: c.seed,
        }
    }
}

#[no_mangle]
pub extern "C" fn mrflab_mh_config_default() -> MrflabMhConfig {
    let d = MhConfig::default();
    MrflabMhConfig {
        steps: d.steps,
        sigma_q2: d.sigma_q2,
        prior_low: d.prior_low,
        prior_high: d.prior_high,
        burn_in_fraction: d.burn_in_fraction,
        thin: d.thin,
        seed: d.seed,
    }
}

/// Run a chain on `lik`. `theta0` may be null to start at the prior
/// midpoint; otherwise it holds `p` doubles.
///
/// # Safety
/// `lik` and `config` must be live/valid, `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn mrflab_run_chain(
    lik: *mut MrflabLikelihood,
    config: *const MrflabMhConfig,
    theta0: *const f64,
    p: usize,
    out: *mut *mut MrflabSamples,
) -> MrflabStatus {
    guard(|| {
        let l = obj_mut(lik, "likelihood")?;
        let cfg: MhConfig = (*obj(config, "config")?).into();
        let start = if theta0.is_null() {
            cfg.default_start(l.p)?
        } else {
            ThetaVector::new(slice(theta0, p, "theta0")?.to_vec())?
        };
        let name = l.inner.name();
        let mut strategy = LikelihoodStrategy::new(name, Borrowed(&mut l.inner));
        let ps = run_chain(&cfg, &mut strategy, &start)?;
        put(out, MrflabSamples(ps))
    })
}

/// Number of retained draws, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn mrflab_samples_len(s: *const MrflabSamples) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// Fraction of accepted proposals, or NaN for a null handle.
///
/// # Safety
/// `s` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn mrflab_samples_acceptance_rate(s: *const MrflabSamples) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.0.acceptance_rate())
}

/// Copy the retained draws, row-major `len x p`, into `out[0..len*p]`.
///
/// # Safety
/// `s` must be live and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mrflab_samples_copy(s: *const MrflabSamples, out: *mut f64, len: usize) -> MrflabStatus {
    guard(|| {
        let ps = &obj(s, "samples")?.0;
        let dst = slice_mut(out, len, "out")?;
        let total: usize = ps.samples().map(<[f64]>::len).sum();
        if len != total {
            return Err(MrfError::DimensionMismatch { expected: total, found: len }.into());
        }
        for (chunk, row) in dst.chunks_mut(total / ps.len().max(1)).zip(ps.samples()) {
            chunk.copy_from_slice(row);
        }
        Ok(())
    })
}

/// Posterior mean and standard deviation per coordinate.
///
/// # Safety
/// `s` must be live; `mean` and `sd` point to `p` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mrflab_samples_summary(
    s: *const MrflabSamples,
    mean: *mut f64,
    sd: *mut f64,
    p: usize,
) -> MrflabStatus {
    guard(|| {
        let (m, d) = posterior_summary(&obj(s, "samples")?.0)?;
        if m.len() != p {
            return Err(MrfError::DimensionMismatch { expected: m.len(), found: p }.into());
        }
        slice_mut(mean, p, "mean")?.copy_from_slice(&m);
        slice_mut(sd, p, "sd")?.copy_from_slice(&d);
        Ok(())
    })
}

/// # Safety
/// `s` must come from `mrflab_run_chain` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mrflab_samples_free(s: *mut MrflabSamples) {
    free(s)
}
