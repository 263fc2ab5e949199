//! Per-replication records and their CSV form.
//!
//! The header is fixed by [`HEADER`]. Floats are written with 17 significant
//! digits so every value reads back bit-exactly, booleans as `0`/`1`, and
//! absent values as empty fields. Wall times are kept out of the records so
//! that reruns produce byte-identical files; they go to `timings.csv`.

use std::path::Path;

use crate::error::{Error, Result};

/// Column order of `records.csv`.
pub const HEADER: [&str; 36] = [
    "point",
    "rep",
    "seed",
    "n",
    "p",
    "s",
    "m",
    "d",
    "lambda",
    "sigma_star",
    "r_n",
    "err_beta_k",
    "err_eta_k",
    "diff_k",
    "diff_sigma",
    "ratio",
    "cone_beta",
    "cone_eta",
    "beta_converged",
    "eta_converged",
    "beta_iterations",
    "eta_iterations",
    "beta_kkt",
    "eta_kkt",
    "beta_nnz",
    "beta_groups",
    "eta_nnz",
    "eta_groups",
    "sparsity_bound",
    "sparsity_ok",
    "covered",
    "t_stat",
    "risk_lhs",
    "risk_rhs",
    "risk_ratio",
    "risk_bound_holds",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub point: usize,
    pub rep: usize,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    /// Number of groups; equals `p` without a group structure.
    pub m: usize,
    pub d: usize,
    /// Penalty level, or the ball radius for the constrained estimator.
    pub lambda: f64,
    /// Noise scale used for the penalty level; `1/2` for the logistic loss.
    pub sigma_star: f64,
    pub r_n: f64,
    pub err_beta_k: f64,
    pub err_eta_k: f64,
    pub diff_k: f64,
    pub diff_sigma: f64,
    /// `diff_k / (err_beta_k + err_eta_k)`, absent when the denominator is zero.
    pub ratio: Option<f64>,
    pub cone_beta: bool,
    pub cone_eta: bool,
    pub beta_converged: bool,
    pub eta_converged: bool,
    pub beta_iterations: usize,
    pub eta_iterations: usize,
    pub beta_kkt: f64,
    pub eta_kkt: f64,
    pub beta_nnz: usize,
    pub beta_groups: usize,
    pub eta_nnz: usize,
    pub eta_groups: usize,
    pub sparsity_bound: Option<f64>,
    pub sparsity_ok: Option<bool>,
    pub covered: Option<bool>,
    pub t_stat: Option<f64>,
    pub risk_lhs: Option<f64>,
    pub risk_rhs: Option<f64>,
    pub risk_ratio: Option<f64>,
    pub risk_bound_holds: Option<bool>,
}

/// Wall-clock seconds of one replication's two solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub point: usize,
    pub rep: usize,
    pub beta_seconds: f64,
    pub eta_seconds: f64,
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

impl ReplicationRecord {
    pub fn converged(&self) -> bool {
        self.beta_converged && self.eta_converged
    }

    pub fn to_row(&self) -> Vec<String> {
        vec![
            self.point.to_string(),
            self.rep.to_string(),
            self.seed.to_string(),
            self.n.to_string(),
            self.p.to_string(),
            self.s.to_string(),
            self.m.to_string(),
            self.d.to_string(),
            float(self.lambda),
            float(self.sigma_star),
            float(self.r_n),
            float(self.err_beta_k),
            float(self.err_eta_k),
            float(self.diff_k),
            float(self.diff_sigma),
            opt(self.ratio, float),
            flag(self.cone_beta),
            flag(self.cone_eta),
            flag(self.beta_converged),
            flag(self.eta_converged),
            self.beta_iterations.to_string(),
            self.eta_iterations.to_string(),
            float(self.beta_kkt),
            float(self.eta_kkt),
            self.beta_nnz.to_string(),
            self.beta_groups.to_string(),
            self.eta_nnz.to_string(),
            self.eta_groups.to_string(),
            opt(self.sparsity_bound, float),
            opt(self.sparsity_ok, flag),
            opt(self.covered, flag),
            opt(self.t_stat, float),
            opt(self.risk_lhs, float),
            opt(self.risk_rhs, float),
            opt(self.risk_ratio, float),
            opt(self.risk_bound_holds, flag),
        ]
    }

    pub fn from_row(row: &csv::StringRecord) -> std::result::Result<Self, String> {
        if row.len() != HEADER.len() {
            return Err(format!("expected {} fields, got {}", HEADER.len(), row.len()));
        }
        let mut cols = row.iter().zip(HEADER);
        let mut next = || cols.next().expect("length checked above");
        fn num<T: std::str::FromStr>((v, name): (&str, &str)) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("column {name}: cannot parse '{v}'"))
        }
        fn boolean((v, name): (&str, &str)) -> std::result::Result<bool, String> {
            match v {
                "1" => Ok(true),
                "0" => Ok(false),
                _ => Err(format!("column {name}: expected 0 or 1, got '{v}'")),
            }
        }
        fn maybe<T>(
            field: (&str, &str),
            f: fn((&str, &str)) -> std::result::Result<T, String>,
        ) -> std::result::Result<Option<T>, String> {
            if field.0.is_empty() {
                Ok(None)
            } else {
                f(field).map(Some)
            }
        }
        Ok(ReplicationRecord {
            point: num(next())?,
            rep: num(next())?,
            seed: num(next())?,
            n: num(next())?,
            p: num(next())?,
            s: num(next())?,
            m: num(next())?,
            d: num(next())?,
            lambda: num(next())?,
            sigma_star: num(next())?,
            r_n: num(next())?,
            err_beta_k: num(next())?,
            err_eta_k: num(next())?,
            diff_k: num(next())?,
            diff_sigma: num(next())?,
            ratio: maybe(next(), num)?,
            cone_beta: boolean(next())?,
            cone_eta: boolean(next())?,
            beta_converged: boolean(next())?,
            eta_converged: boolean(next())?,
            beta_iterations: num(next())?,
            eta_iterations: num(next())?,
            beta_kkt: num(next())?,
            eta_kkt: num(next())?,
            beta_nnz: num(next())?,
            beta_groups: num(next())?,
            eta_nnz: num(next())?,
            eta_groups: num(next())?,
            sparsity_bound: maybe(next(), num)?,
            sparsity_ok: maybe(next(), boolean)?,
            covered: maybe(next(), boolean)?,
            t_stat: maybe(next(), num)?,
            risk_lhs: maybe(next(), num)?,
            risk_rhs: maybe(next(), num)?,
            risk_ratio: maybe(next(), num)?,
            risk_bound_holds: maybe(next(), boolean)?,
        })
    }
}

pub fn write_records(path: &Path, records: &[ReplicationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(HEADER)?;
    for r in records {
        w.write_record(r.to_row())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<ReplicationRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: "records header does not match the expected columns".into(),
        });
    }
    r.records()
        .enumerate()
        .map(|(i, row)| {
            ReplicationRecord::from_row(&row?).map_err(|reason| Error::Format {
                path: path.to_path_buf(),
                reason: format!("row {}: {reason}", i + 1),
            })
        })
        .collect()
}

pub fn write_timings(path: &Path, timings: &[Timing]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["point", "rep", "beta_seconds", "eta_seconds"])?;
    for t in timings {
        w.write_record([
            t.point.to_string(),
            t.rep.to_string(),
            float(t.beta_seconds),
            float(t.eta_seconds),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format {
            path: path.to_path_buf(),
            reason: format!("{other:?}"),
        },
    }
}
