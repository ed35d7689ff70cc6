//! MLE-induced likelihood: one coin-toss marginal per edge, joined by an
//! exchangeable Gaussian copula.
//!
//! Each edge is modelled as a coin whose head probability `theta` is
//! perturbed by an external effect `eta`:
//! `lambda = eta*theta / (eta*theta + (1-eta)*(1-theta))`. Choosing `eta0`
//! so that `lambda(theta_hat) = alpha/n` puts the mode of the marginal at the
//! CD estimate `theta_hat`.

use std::io::Write;

use crate::error::{check_len, MrfError, Result};
use crate::math::{ln_choose, normal_quantile, xlogy};
use crate::model::{sufficient_stats, Dataset, GridSpec, SufficientStats, ThetaVector};

pub const DEFAULT_CDF_GRID: usize = 4096;
pub const MIN_CDF_GRID: usize = 256;
/// `build_model` doubles the quadrature grid up to this size when a marginal
/// is too concentrated for the default.
pub const MAX_CDF_GRID: usize = 65536;
/// Largest share of unnormalized mass allowed in the two outermost cells.
pub const EDGE_MASS_LIMIT: f64 = 1e-3;

fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(MrfError::Domain(format!("{name} = {v} is not in (0, 1)")))
    }
}

pub fn lambda_of(theta: f64, eta: f64) -> Result<f64> {
    check_open_unit("theta", theta)?;
    check_open_unit("eta", eta)?;
    let a = eta * theta;
    Ok(a / (a + (1.0 - eta) * (1.0 - theta)))
}

/// `alpha/n`, clamped to `[1/(2n), 1 - 1/(2n)]`.
pub fn lambda_mle(alpha0: u64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(MrfError::Empty("sample"));
    }
    if alpha0 > n {
        return Err(MrfError::Domain(format!("alpha0 = {alpha0} exceeds n = {n}")));
    }
    let half = 0.5 / n as f64;
    Ok((alpha0 as f64 / n as f64).clamp(half, 1.0 - half))
}

/// Inverse of [`lambda_of`] in `eta`.
pub fn eta0_of(lambda_hat: f64, theta_hat: f64) -> Result<f64> {
    check_open_unit("lambda_hat", lambda_hat)?;
    check_open_unit("theta_hat", theta_hat)?;
    let denom = lambda_hat * (1.0 - theta_hat) + theta_hat * (1.0 - lambda_hat);
    if !(denom > 0.0) {
        return Err(MrfError::Domain("eta0 denominator is not positive".into()));
    }
    Ok(lambda_hat * (1.0 - theta_hat) / denom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalCoinModel {
    eta0: f64,
    alpha0: u64,
    n: u64,
    log_binom: f64,
    // log_binom + alpha0 log eta0 + (n - alpha0) log(1 - eta0)
    constant: f64,
}

impl MarginalCoinModel {
    /// `n = 0` is allowed and gives a flat likelihood.
    pub fn new(eta0: f64, alpha0: u64, n: u64) -> Result<Self> {
        check_open_unit("eta0", eta0)?;
        if alpha0 > n {
            return Err(MrfError::Domain(format!("alpha0 = {alpha0} exceeds n = {n}")));
        }
        let log_binom = ln_choose(n, alpha0);
        let a = alpha0 as f64;
        let b = (n - alpha0) as f64;
        Ok(Self {
            eta0,
            alpha0,
            n,
            log_binom,
            constant: log_binom + xlogy(a, eta0) + xlogy(b, 1.0 - eta0),
        })
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn alpha0(&self) -> u64 {
        self.alpha0
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn log_binom(&self) -> f64 {
        self.log_binom
    }

    /// Unchecked evaluation; `theta` may sit on the closed interval, where
    /// `0 * log 0` is taken as 0.
    #[inline]
    pub fn eval(&self, theta: f64) -> f64 {
        let a = self.alpha0 as f64;
        let b = (self.n - self.alpha0) as f64;
        let mix = self.eta0 * theta + (1.0 - self.eta0) * (1.0 - theta);
        self.constant + xlogy(a, theta) + xlogy(b, 1.0 - theta) - self.n as f64 * mix.ln()
    }
}

pub fn log_marginal_likelihood(theta: f64, m: &MarginalCoinModel) -> Result<f64> {
    check_open_unit("theta", theta)?;
    Ok(m.eval(theta))
}

/// Cumulative distribution of a standardized marginal on a uniform grid over
/// `[0, 1]`, evaluated by linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    values: Vec<f64>,
}

impl CdfTable {
    /// Number of grid intervals.
    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn eval(&self, theta: f64) -> f64 {
        let n = self.intervals();
        let pos = theta.clamp(0.0, 1.0) * n as f64;
        let i = (pos as usize).min(n - 1);
        let frac = pos - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}

/// Normalize `exp(log_marginal_likelihood)` over `(0, 1)` with composite
/// Simpson and return the cumulative table.
///
/// `grid_size` is the number of intervals, rounded up to an even number.
/// The cumulative value at odd nodes uses the single-interval Simpson
/// formula; a running maximum keeps the table monotone.
pub fn standardize_cdf(m: &MarginalCoinModel, grid_size: usize) -> Result<CdfTable> {
    if grid_size < MIN_CDF_GRID {
        return Err(MrfError::Domain(format!(
            "grid_size must be at least {MIN_CDF_GRID}, got {grid_size}"
        )));
    }
    let n = grid_size + grid_size % 2;
    let h = 1.0 / n as f64;
    let log_f: Vec<f64> = (0..=n).map(|i| m.eval(i as f64 * h)).collect();
    let shift = log_f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(MrfError::Resolution("marginal likelihood is not finite".into()));
    }
    let f: Vec<f64> = log_f.iter().map(|&l| (l - shift).exp()).collect();

    let mut cum = vec![0.0; n + 1];
    let mut running = 0.0f64;
    for k in (0..n).step_by(2) {
        let (f0, f1, f2) = (f[k], f[k + 1], f[k + 2]);
        let half = h / 12.0 * (5.0 * f0 + 8.0 * f1 - f2);
        let full = h / 3.0 * (f0 + 4.0 * f1 + f2);
        let base = cum[k];
        running = running.max(base + half);
        cum[k + 1] = running;
        running = running.max(base + full);
        cum[k + 2] = running;
    }
    let total = cum[n];
    if !(total > 0.0) {
        return Err(MrfError::Resolution("marginal likelihood has no mass".into()));
    }
    let outer = cum[1] + (total - cum[n - 1]);
    if outer > EDGE_MASS_LIMIT * total {
        return Err(MrfError::Resolution(format!(
            "{:.3e} of the mass lies in the outermost cells at {n} intervals",
            outer / total
        )));
    }
    for c in cum.iter_mut() {
        *c /= total;
    }
    cum[n] = 1.0;
    Ok(CdfTable { values: cum })
}

/// Exchangeable Gaussian copula with common correlation `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaSpec {
    rho: f64,
    p: usize,
    log_det: f64,
    // u'(R^-1 - I)u = a * sum(u^2) - b * sum(u)^2
    a: f64,
    b: f64,
}

impl CopulaSpec {
    pub fn new(rho: f64, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(MrfError::Empty("copula dimension"));
        }
        let lower = if p == 1 { -1.0 } else { -1.0 / (p - 1) as f64 };
        if !(rho > lower && rho < 1.0) {
            return Err(MrfError::Correlation { rho, p });
        }
        let q = (p - 1) as f64;
        let one_minus = 1.0 - rho;
        let spread = 1.0 + q * rho;
        Ok(Self {
            rho,
            p,
            log_det: q * one_minus.ln() + spread.ln(),
            a: rho / one_minus,
            b: rho / (one_minus * spread),
        })
    }

    pub fn independent(p: usize) -> Result<Self> {
        Self::new(0.0, p)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_independent(&self) -> bool {
        self.rho == 0.0
    }

    #[inline]
    fn eval(&self, u: &[f64]) -> f64 {
        let (mut sq, mut sum) = (0.0, 0.0);
        for &x in u {
            sq += x * x;
            sum += x;
        }
        -0.5 * self.log_det - 0.5 * (self.a * sq - self.b * sum * sum)
    }
}

/// `-1/2 log det R - 1/2 u'(R^-1 - I)u` for normal scores `u`.
pub fn log_gaussian_copula_density(u: &[f64], spec: &CopulaSpec) -> Result<f64> {
    check_len(spec.p, u.len())?;
    Ok(spec.eval(u))
}

#[derive(Debug, Clone)]
pub struct MleLikelihoodModel {
    marginals: Vec<MarginalCoinModel>,
    copula: CopulaSpec,
    cdf_tables: Vec<CdfTable>,
    lambda_hat: Vec<f64>,
    theta_hat: Vec<f64>,
    underresolved: Vec<usize>,
}

impl MleLikelihoodModel {
    pub fn marginals(&self) -> &[MarginalCoinModel] {
        &self.marginals
    }

    pub fn copula(&self) -> &CopulaSpec {
        &self.copula
    }

    pub fn cdf_tables(&self) -> &[CdfTable] {
        &self.cdf_tables
    }

    pub fn num_params(&self) -> usize {
        self.marginals.len()
    }

    /// Edges whose marginal stayed too concentrated for the largest
    /// quadrature grid; their tables come from that grid regardless.
    pub fn underresolved(&self) -> &[usize] {
        &self.underresolved
    }

    /// Unchecked joint evaluation for `theta` in `(0, 1)^p`.
    pub fn eval(&self, theta: &[f64]) -> f64 {
        let marg: f64 = self
            .marginals
            .iter()
            .zip(theta)
            .map(|(m, &t)| m.eval(t))
            .sum();
        if self.copula.is_independent() || self.marginals.len() == 1 {
            return marg;
        }
        let mut u = Vec::with_capacity(theta.len());
        u.extend(
            self.cdf_tables
                .iter()
                .zip(theta)
                .map(|(f, &t)| normal_quantile(f.eval(t))),
        );
        marg + self.copula.eval(&u)
    }

    /// CSV with columns `edge_index, alpha0, n, lambda_hat, theta_hat, eta0`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["edge_index", "alpha0", "n", "lambda_hat", "theta_hat", "eta0"])
            .map_err(csv_error)?;
        for (j, m) in self.marginals.iter().enumerate() {
            w.write_record([
                j.to_string(),
                m.alpha0.to_string(),
                m.n.to_string(),
                self.lambda_hat[j].to_string(),
                self.theta_hat[j].to_string(),
                m.eta0.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> MrfError {
    MrfError::Parse(e.to_string())
}

pub fn log_joint_likelihood(theta: &ThetaVector, model: &MleLikelihoodModel) -> Result<f64> {
    check_len(model.num_params(), theta.len())?;
    Ok(model.eval(theta.as_slice()))
}

pub fn build_model(
    data: &Dataset,
    theta_hat: &ThetaVector,
    grid: &GridSpec,
    rho: f64,
) -> Result<MleLikelihoodModel> {
    let stats = sufficient_stats(data, grid)?;
    build_model_from_stats(&stats, theta_hat, rho)
}

/// Per edge: `lambda_hat` from the agreement count, `eta0` from
/// `(lambda_hat, theta_hat)`, then a CDF table, doubling the quadrature grid
/// while the marginal is under-resolved.
pub fn build_model_from_stats(
    stats: &SufficientStats,
    theta_hat: &ThetaVector,
    rho: f64,
) -> Result<MleLikelihoodModel> {
    let p = theta_hat.len();
    check_len(p, stats.agree.len())?;
    let copula = CopulaSpec::new(rho, p)?;
    let n = stats.n as u64;
    let mut marginals = Vec::with_capacity(p);
    let mut cdf_tables = Vec::with_capacity(p);
    let mut lambda_hat = Vec::with_capacity(p);
    let mut underresolved = Vec::new();
    for (j, (&alpha, &t)) in stats.agree.iter().zip(theta_hat.as_slice()).enumerate() {
        let lam = lambda_mle(alpha as u64, n)?;
        let m = MarginalCoinModel::new(eta0_of(lam, t)?, alpha as u64, n)?;
        let mut size = DEFAULT_CDF_GRID;
        let table = loop {
            match standardize_cdf(&m, size) {
                Ok(table) => break table,
                Err(MrfError::Resolution(_)) if size < MAX_CDF_GRID => size *= 2,
                Err(MrfError::Resolution(_)) => {
                    underresolved.push(j);
                    break forced_table(&m, size);
                }
                Err(e) => return Err(e),
            }
        };
        marginals.push(m);
        cdf_tables.push(table);
        lambda_hat.push(lam);
    }
    Ok(MleLikelihoodModel {
        marginals,
        copula,
        cdf_tables,
        lambda_hat,
        theta_hat: theta_hat.as_slice().to_vec(),
        underresolved,
    })
}

// Same quadrature without the resolution check. Mass piled against a
// boundary still yields a valid monotone table.
fn forced_table(m: &MarginalCoinModel, n: usize) -> CdfTable {
    let h = 1.0 / n as f64;
    let log_f: Vec<f64> = (0..=n).map(|i| m.eval(i as f64 * h)).collect();
    let shift = log_f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut cum = vec![0.0; n + 1];
    for i in 0..n {
        let trap = 0.5 * h * ((log_f[i] - shift).exp() + (log_f[i + 1] - shift).exp());
        cum[i + 1] = cum[i] + trap;
    }
    let total = cum[n];
    for c in cum.iter_mut() {
        *c /= total;
    }
    CdfTable { values: cum }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::normal_cdf;

    #[test]
    fn lambda_examples() {
        assert!((lambda_of(0.7, 0.5).unwrap() - 0.7).abs() < 1e-15);
        assert!((lambda_of(0.7, 0.6).unwrap() - 7.0 / 9.0).abs() < 1e-15);
        assert!((lambda_of(0.5, 0.23).unwrap() - 0.23).abs() < 1e-15);
        assert!(lambda_of(1.0, 0.5).is_err());
        assert!(lambda_of(0.5, 0.0).is_err());
    }

    #[test]
    fn lambda_mle_clamps() {
        assert_eq!(lambda_mle(700, 1000).unwrap(), 0.7);
        assert_eq!(lambda_mle(0, 10).unwrap(), 0.05);
        assert_eq!(lambda_mle(10, 10).unwrap(), 0.95);
        assert!(lambda_mle(11, 10).is_err());
        assert!(lambda_mle(0, 0).is_err());
    }

    #[test]
    fn eta0_examples() {
        assert!((eta0_of(0.3, 0.3).unwrap() - 0.5).abs() < 1e-15);
        assert!((eta0_of(7.0 / 9.0, 0.7).unwrap() - 0.6).abs() < 1e-12);
        assert!(eta0_of(0.0, 0.7).is_err());
    }

    #[test]
    fn fair_external_effect_is_plain_binomial() {
        let m = MarginalCoinModel::new(0.5, 30, 100).unwrap();
        let t: f64 = 0.41;
        // the eta0 factors cancel the normalizer exactly
        let expected = ln_choose(100, 30) + 30.0 * t.ln() + 70.0 * (1.0 - t).ln();
        assert!((log_marginal_likelihood(t, &m).unwrap() - expected).abs() < 1e-10);
        assert!(log_marginal_likelihood(0.0, &m).is_err());
    }

    #[test]
    fn symmetric_cdf_is_half_at_center() {
        let m = MarginalCoinModel::new(0.5, 50, 100).unwrap();
        let f = standardize_cdf(&m, DEFAULT_CDF_GRID).unwrap();
        assert!((f.eval(0.5) - 0.5).abs() < 1e-6);
        assert_eq!(f.values()[0], 0.0);
        assert_eq!(*f.values().last().unwrap(), 1.0);
        assert!(f.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn empty_sample_gives_uniform_cdf() {
        let m = MarginalCoinModel::new(0.3, 0, 0).unwrap();
        let f = standardize_cdf(&m, DEFAULT_CDF_GRID).unwrap();
        for t in [0.1, 0.25, 0.5, 0.9] {
            assert!((f.eval(t) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_self_convergence() {
        let eta = eta0_of(0.74, 0.68).unwrap();
        let m = MarginalCoinModel::new(eta, 370, 500).unwrap();
        let coarse = standardize_cdf(&m, 4096).unwrap();
        let fine = standardize_cdf(&m, 16384).unwrap();
        assert!((coarse.eval(0.68) - fine.eval(0.68)).abs() < 1e-5);
    }

    #[test]
    fn cdf_rejects_small_grid_and_concentrated_mass() {
        let m = MarginalCoinModel::new(0.5, 50, 100).unwrap();
        assert!(standardize_cdf(&m, 100).is_err());
        let tight = MarginalCoinModel::new(eta0_of(0.5 / 1000.0, 1e-4).unwrap(), 0, 1000).unwrap();
        assert!(matches!(standardize_cdf(&tight, 256), Err(MrfError::Resolution(_))));
    }

    #[test]
    fn copula_examples() {
        let spec = CopulaSpec::new(0.5, 2).unwrap();
        let v = log_gaussian_copula_density(&[0.0, 0.0], &spec).unwrap();
        assert!((v - (-0.5 * 0.75f64.ln())).abs() < 1e-12);
        assert!((v - 0.143841036225890).abs() < 1e-12);
        let ind = CopulaSpec::independent(3).unwrap();
        assert_eq!(log_gaussian_copula_density(&[0.3, -1.0, 2.0], &ind).unwrap(), 0.0);
        assert!(log_gaussian_copula_density(&[0.0], &spec).is_err());
    }

    #[test]
    fn copula_matches_dense_two_by_two() {
        // R = [[1, r], [r, 1]], R^-1 = [[1, -r], [-r, 1]] / (1 - r^2)
        let r: f64 = -0.35;
        let (x, y): (f64, f64) = (0.8, -1.3);
        let q = (x * x - 2.0 * r * x * y + y * y) / (1.0 - r * r) - (x * x + y * y);
        let expected = -0.5 * (1.0 - r * r).ln() - 0.5 * q;
        let spec = CopulaSpec::new(r, 2).unwrap();
        assert!((log_gaussian_copula_density(&[x, y], &spec).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn copula_positive_definite_range() {
        assert!(CopulaSpec::new(1.0, 4).is_err());
        assert!(CopulaSpec::new(-1.0 / 3.0, 4).is_err());
        assert!(CopulaSpec::new(-0.33, 4).is_ok());
        assert!(CopulaSpec::new(0.9, 1).is_ok());
        assert!(CopulaSpec::new(0.1, 0).is_err());
    }

    #[test]
    fn build_model_sets_fair_eta_when_lambda_equals_theta() {
        let stats = SufficientStats { agree: vec![60, 75], n: 100 };
        let theta = ThetaVector::new(vec![0.6, 0.7]).unwrap();
        let model = build_model_from_stats(&stats, &theta, 0.1).unwrap();
        assert!((model.marginals()[0].eta0() - 0.5).abs() < 1e-15);
        assert!(model.marginals()[1].eta0() > 0.5);
        assert!(model.underresolved().is_empty());
    }

    #[test]
    fn single_parameter_joint_equals_marginal() {
        let stats = SufficientStats { agree: vec![62], n: 100 };
        let theta = ThetaVector::new(vec![0.64]).unwrap();
        let model = build_model_from_stats(&stats, &theta, 0.5).unwrap();
        for t in [0.2, 0.64, 0.9] {
            let joint = log_joint_likelihood(&ThetaVector::new(vec![t]).unwrap(), &model).unwrap();
            assert_eq!(joint, model.marginals()[0].eval(t));
        }
    }

    #[test]
    fn copula_scores_follow_cdf() {
        let stats = SufficientStats { agree: vec![62, 80, 71], n: 100 };
        let theta = ThetaVector::new(vec![0.64, 0.75, 0.7]).unwrap();
        let model = build_model_from_stats(&stats, &theta, 0.05).unwrap();
        let t = [0.6, 0.8, 0.66];
        let u: Vec<f64> = model
            .cdf_tables()
            .iter()
            .zip(t)
            .map(|(f, x)| normal_quantile(f.eval(x)))
            .collect();
        for (ui, (f, x)) in u.iter().zip(model.cdf_tables().iter().zip(t)) {
            assert!((normal_cdf(*ui) - f.eval(x)).abs() < 1e-9);
        }
        let marg: f64 = model.marginals().iter().zip(t).map(|(m, x)| m.eval(x)).sum();
        let expected = marg + log_gaussian_copula_density(&u, model.copula()).unwrap();
        let got = log_joint_likelihood(&ThetaVector::new(t.to_vec()).unwrap(), &model).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn degenerate_edge_is_flagged_not_fatal() {
        let stats = SufficientStats { agree: vec![1000, 500], n: 1000 };
        let theta = ThetaVector::new(vec![1.0 - 1e-6, 0.5]).unwrap();
        let model = build_model_from_stats(&stats, &theta, 0.1).unwrap();
        assert_eq!(model.underresolved(), &[0]);
        let f = &model.cdf_tables()[0];
        assert!(f.values().windows(2).all(|w| w[0] <= w[1]));
        let v = log_joint_likelihood(&ThetaVector::new(vec![0.9, 0.5]).unwrap(), &model).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn csv_dump_columns() {
        let stats = SufficientStats { agree: vec![60], n: 100 };
        let theta = ThetaVector::new(vec![0.6]).unwrap();
        let model = build_model_from_stats(&stats, &theta, 0.0).unwrap();
        let mut buf = Vec::new();
        model.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "edge_index,alpha0,n,lambda_hat,theta_hat,eta0\n0,60,100,0.6,0.6,0.5\n");
    }
}
