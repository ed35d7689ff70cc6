use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::runner::{csv_err, Layout};
use super::svg::{line_chart, Series};
use crate::error::{MrfError, Result};

/// One line of `report.csv`. Skipped (method, dataset) pairs have every
/// field after `rho` empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub replicate: usize,
    pub n: usize,
    pub rho: Option<f64>,
    pub param_index: Option<usize>,
    pub true_theta: Option<f64>,
    pub post_mean: Option<f64>,
    pub post_sd: Option<f64>,
    pub ref_post_mean: Option<f64>,
    pub runtime_ms: Option<f64>,
    pub acceptance_rate: Option<f64>,
}

impl ReportRow {
    pub fn is_skip(&self) -> bool {
        self.post_mean.is_none()
    }

    /// Method name with the copula correlation appended when present.
    pub fn label(&self) -> String {
        match self.rho {
            Some(r) => format!("{}(rho={r})", self.method),
            None => self.method.clone(),
        }
    }
}

pub(crate) fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_report<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record([
        "method",
        "replicate",
        "n",
        "rho",
        "param_index",
        "true_theta",
        "post_mean",
        "post_sd",
        "ref_post_mean",
        "runtime_ms",
        "acceptance_rate",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report<R: Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize()
        .map(|r| r.map_err(|e| MrfError::Parse(format!("malformed report: {e}"))))
        .collect()
}

/// Aggregate errors for one (method, rho, n).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub rho: Option<f64>,
    pub n: usize,
    /// Mean over replicates and parameters of `|post_mean - ref|`, the
    /// reference being the exact chain's mean when present, else the truth.
    pub mean_abs_mean_error: f64,
    /// Mean of `|post_sd - exact post_sd|`; absent without exact rows.
    pub mean_abs_sd_error: Option<f64>,
    pub replicates: usize,
}

type Key = (String, Option<u64>, usize);

fn key(row: &ReportRow) -> Key {
    (row.method.clone(), row.rho.map(f64::to_bits), row.n)
}

pub fn summarize(rows: &[ReportRow]) -> Vec<SummaryRow> {
    let exact: HashMap<(usize, usize, usize), (f64, f64)> = rows
        .iter()
        .filter(|r| r.method == "exact" && !r.is_skip())
        .filter_map(|r| Some(((r.replicate, r.n, r.param_index?), (r.post_mean?, r.post_sd?))))
        .collect();

    struct Acc {
        method: String,
        rho: Option<f64>,
        mean_err: f64,
        sd_err: f64,
        count: usize,
        sd_count: usize,
        reps: BTreeSet<usize>,
    }
    let mut groups: Vec<(Key, Acc)> = Vec::new();
    for r in rows.iter().filter(|r| !r.is_skip()) {
        let (Some(j), Some(mean), Some(sd)) = (r.param_index, r.post_mean, r.post_sd) else {
            continue;
        };
        let ex = exact.get(&(r.replicate, r.n, j));
        let reference = match (ex, r.ref_post_mean, r.true_theta) {
            (Some(&(m, _)), _, _) => m,
            (None, Some(m), _) => m,
            (None, None, Some(t)) => t,
            _ => continue,
        };
        let k = key(r);
        let pos = match groups.iter().position(|(g, _)| *g == k) {
            Some(p) => p,
            None => {
                groups.push((
                    k,
                    Acc {
                        method: r.method.clone(),
                        rho: r.rho,
                        mean_err: 0.0,
                        sd_err: 0.0,
                        count: 0,
                        sd_count: 0,
                        reps: BTreeSet::new(),
                    },
                ));
                groups.len() - 1
            }
        };
        let acc = &mut groups[pos].1;
        acc.mean_err += (mean - reference).abs();
        acc.count += 1;
        if let Some(&(_, ref_sd)) = ex {
            acc.sd_err += (sd - ref_sd).abs();
            acc.sd_count += 1;
        }
        acc.reps.insert(r.replicate);
    }
    groups
        .into_iter()
        .map(|((_, _, n), a)| SummaryRow {
            method: a.method,
            rho: a.rho,
            n,
            mean_abs_mean_error: a.mean_err / a.count as f64,
            mean_abs_sd_error: (a.sd_count > 0).then(|| a.sd_err / a.sd_count as f64),
            replicates: a.reps.len(),
        })
        .collect()
}

/// Sample sizes (columns) and, per series label, one optional cell per size.
pub type RuntimeTable = (Vec<usize>, Vec<(String, Vec<Option<f64>>)>);

/// Mean chain run time per (label, n) over replicates, one value per chain.
pub fn runtime_table(rows: &[ReportRow]) -> RuntimeTable {
    let mut per_chain: BTreeMap<(String, usize), BTreeMap<usize, f64>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut ns = BTreeSet::new();
    for r in rows.iter().filter(|r| !r.is_skip()) {
        let label = r.label();
        if !order.contains(&label) {
            order.push(label.clone());
        }
        ns.insert(r.n);
        if let Some(ms) = r.runtime_ms {
            per_chain.entry((label, r.n)).or_default().insert(r.replicate, ms);
        }
    }
    let ns: Vec<usize> = ns.into_iter().collect();
    let table = order
        .into_iter()
        .map(|label| {
            let cells = ns
                .iter()
                .map(|&n| {
                    per_chain.get(&(label.clone(), n)).map(|m| m.values().sum::<f64>() / m.len() as f64)
                })
                .collect();
            (label, cells)
        })
        .collect();
    (ns, table)
}

fn series_from(summary: &[SummaryRow], metric: impl Fn(&SummaryRow) -> Option<f64>) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for s in summary {
        let Some(v) = metric(s) else { continue };
        let label = match s.rho {
            Some(r) => format!("{}(rho={r})", s.method),
            None => s.method.clone(),
        };
        match out.iter_mut().find(|x| x.label == label) {
            Some(series) => series.points.push((s.n as f64, v)),
            None => out.push(Series {
                label,
                points: vec![(s.n as f64, v)],
            }),
        }
    }
    for s in &mut out {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

/// Read `report.csv` and write `summary.csv`, `runtime_table.csv` and the
/// two error charts.
pub fn cmd_report(layout: &Layout) -> Result<usize> {
    let rows = read_report(std::fs::File::open(layout.report())?)?;
    let summary = summarize(&rows);

    let mut w = csv::Writer::from_path(layout.summary()).map_err(csv_err)?;
    w.write_record(["method", "rho", "n", "mean_abs_mean_error", "mean_abs_sd_error", "replicates"])
        .map_err(csv_err)?;
    for s in &summary {
        w.write_record([
            s.method.clone(),
            fmt_opt(s.rho),
            s.n.to_string(),
            s.mean_abs_mean_error.to_string(),
            fmt_opt(s.mean_abs_sd_error),
            s.replicates.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;

    let (ns, table) = runtime_table(&rows);
    let mut w = csv::Writer::from_path(layout.runtime_table()).map_err(csv_err)?;
    let mut header = vec!["method".to_string()];
    header.extend(ns.iter().map(|n| format!("n={n}")));
    w.write_record(&header).map_err(csv_err)?;
    for (label, cells) in &table {
        let mut rec = vec![label.clone()];
        rec.extend(cells.iter().map(|c| fmt_opt(*c)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;

    let mean_series = series_from(&summary, |s| Some(s.mean_abs_mean_error));
    std::fs::write(
        layout.mean_error_svg(),
        line_chart("Posterior mean error", "n", "mean |mu - ref|", &mean_series),
    )?;
    let sd_series = series_from(&summary, |s| s.mean_abs_sd_error);
    std::fs::write(
        layout.sd_error_svg(),
        line_chart("Posterior sd error", "n", "mean |sigma - sigma_exact|", &sd_series),
    )?;
    Ok(summary.len())
}
