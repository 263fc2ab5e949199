//! Deterministic parallel replication engine.
//!
//! Each `(grid point, replication)` task derives its seed from the master
//! seed and its coordinates, so its output does not depend on the worker
//! that ran it. Results are collected in task order before anything is
//! written.

use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind, GridPoint, PenaltyKind};
use super::ratefit::{rate_fit, RateFit};
use super::records::{write_records, write_timings, ReplicationRecord, Timing};
use super::summary::{median, quantile, Frequency, Quantiles, QUANTILE_LEVELS};
use crate::cones::{
    cone_member, group_cone_constant, group_cone_probability, group_rate, lambda_group, lambda_lasso,
    lasso_cone_parameter, lasso_cone_probability, lasso_rate, phi_lower_bound, ConeSpec,
};
use crate::diagnostics::{debiased_estimate, risk_identity_check, sparsity_constant, sparsity_count};
use crate::error::{Error, Result};
use crate::loss::{b3_constant, curvature_matrix, CurvatureMatrix, LossKind};
use crate::model::{
    generate_design, generate_linear, generate_logistic, sigma_star, CovarianceModel, DesignKind,
    GroundTruth, GroupStructure,
};
use crate::penalty::PenaltySpec;
use crate::rng::derive_seed;
use crate::solver::{fit_beta_hat, fit_eta, SolverConfig};

/// Relative slack of the cone membership tests.
const CONE_TOL: f64 = 1e-9;

/// Metrics whose medians are fitted against `r_n` in `rates.csv`.
pub const RATE_METRICS: [&str; 4] = ["diff_sigma", "diff_k", "err_beta_k", "err_eta_k"];

/// Fixed per-point inputs shared by all replications of that point.
struct PointContext {
    index: usize,
    grid: GridPoint,
    cov: CovarianceModel,
    truth: GroundTruth,
    groups: Option<GroupStructure>,
    k: CurvatureMatrix,
    cone: ConeSpec,
    r_n: f64,
    sparsity_bound: Option<f64>,
}

impl PointContext {
    fn new(cfg: &ExperimentConfig, index: usize, grid: GridPoint) -> Result<Self> {
        let cov = CovarianceModel::from_spec(&cfg.covariance, grid.p)?;
        let groups = match cfg.penalty {
            PenaltyKind::GroupLasso => Some(GroupStructure::contiguous(grid.p, grid.d.unwrap_or(1))?),
            _ => None,
        };
        let mut truth = match &groups {
            Some(g) => GroundTruth::group_sparse(*g, grid.s, cfg.beta_value)?,
            None => GroundTruth::sparse(grid.p, grid.s, cfg.beta_value)?,
        };
        if cfg.loss == LossKind::Logistic {
            // the logistic regularity constants need ‖Σ^{1/2}β*‖ ≤ 1
            let norm = cov.matrix.norm(&truth.beta_star);
            if norm > 1.0 {
                truth = GroundTruth::from_vector(&truth.beta_star / norm, truth.groups);
            }
        }
        let k = curvature_matrix(cfg.loss, &cov, &truth.beta_star, cfg.design)?;
        let (cone, r_n) = match (&groups, cfg.penalty) {
            (Some(g), _) => (
                ConeSpec::Group {
                    c: group_cone_constant(cfg.xi),
                    s: grid.s,
                    groups: *g,
                },
                group_rate(grid.s, g.d, g.m, grid.n),
            ),
            (None, PenaltyKind::L1Ball) => (
                ConeSpec::Support {
                    support: truth.support.clone(),
                },
                lasso_rate(grid.s, grid.p, grid.n),
            ),
            (None, _) => (
                ConeSpec::Lasso {
                    k: lasso_cone_parameter(cfg.xi, grid.s),
                },
                lasso_rate(grid.s, grid.p, grid.n),
            ),
        };
        let sparsity_bound = if cfg.experiment == ExperimentKind::SparsityCheck {
            let b3 = b3_constant(&cov, &k)?;
            let phi = phi_lower_bound(&cone, &cov)?;
            Some(sparsity_constant(cfg.c_max, cfg.xi, b3, phi)? * grid.s as f64)
        } else {
            None
        };
        Ok(PointContext {
            index,
            grid,
            cov,
            truth,
            groups,
            k,
            cone,
            r_n,
            sparsity_bound,
        })
    }

    fn penalty(&self, cfg: &ExperimentConfig, sigma: f64) -> Result<PenaltySpec> {
        let g = &self.grid;
        let l = cfg.design.subgaussian_constant();
        Ok(match (cfg.penalty, &self.groups) {
            (PenaltyKind::L1, _) => PenaltySpec::L1 {
                lambda: lambda_lasso(cfg.loss, l, sigma, cfg.xi, g.p, g.s, g.n)?,
            },
            (PenaltyKind::L1Ball, _) => PenaltySpec::L1Ball {
                radius: self.truth.beta_star.iter().map(|v| v.abs()).sum(),
            },
            (PenaltyKind::GroupLasso, Some(groups)) => PenaltySpec::GroupLasso {
                lambda: lambda_group(l, sigma, cfg.xi, groups.d, groups.m, g.s, g.n)?,
                groups: *groups,
            },
            (PenaltyKind::GroupLasso, None) => unreachable!("group structure built with the context"),
        })
    }

    fn replicate(&self, cfg: &ExperimentConfig, rep: usize) -> Result<(ReplicationRecord, Timing)> {
        let g = &self.grid;
        let seed = derive_seed(cfg.master_seed, &[self.index as u64, rep as u64]);
        let design = generate_design(&self.cov, g.n, cfg.design, seed)?;
        let beta_star = &self.truth.beta_star;
        let (dataset, sigma) = match cfg.loss {
            LossKind::Squared => {
                let data = generate_linear(design, beta_star, cfg.noise_sd, seed)?;
                let sigma = sigma_star(&data)?;
                (data, sigma)
            }
            LossKind::Logistic => (generate_logistic(design, beta_star, seed)?, 0.5),
        };
        let penalty = self.penalty(cfg, sigma)?;
        let solver = SolverConfig {
            kkt_tol: cfg.tol,
            ..SolverConfig::default()
        };
        let clock = Instant::now();
        let beta = fit_beta_hat(&dataset, cfg.loss, &penalty, &solver)?;
        let beta_seconds = clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let eta = fit_eta(&dataset, cfg.loss, &self.k, beta_star, &penalty, &solver)?;
        let eta_seconds = clock.elapsed().as_secs_f64();

        let (bh, et) = (&beta.solution, &eta.solution);
        let err_beta_k = self.k.norm(&(bh - beta_star));
        let err_eta_k = self.k.norm(&(et - beta_star));
        let diff = et - bh;
        let diff_k = self.k.norm(&diff);
        let denom = err_beta_k + err_eta_k;
        let (beta_nnz, beta_groups) = sparsity_count(bh, self.groups.as_ref());
        let (eta_nnz, eta_groups) = sparsity_count(et, self.groups.as_ref());

        let mut record = ReplicationRecord {
            point: self.index,
            rep,
            seed,
            n: g.n,
            p: g.p,
            s: g.s,
            m: self.groups.as_ref().map_or(g.p, |gr| gr.m),
            d: self.groups.as_ref().map_or(1, |gr| gr.d),
            lambda: match &penalty {
                PenaltySpec::L1 { lambda } | PenaltySpec::GroupLasso { lambda, .. } => *lambda,
                PenaltySpec::L1Ball { radius } => *radius,
            },
            sigma_star: sigma,
            r_n: self.r_n,
            err_beta_k,
            err_eta_k,
            diff_k,
            diff_sigma: self.cov.matrix.norm(&diff),
            ratio: (denom > 0.0).then(|| diff_k / denom),
            cone_beta: cone_member(&self.cone, &(bh - beta_star), CONE_TOL),
            cone_eta: cone_member(&self.cone, &(et - beta_star), CONE_TOL),
            beta_converged: beta.converged,
            eta_converged: eta.converged,
            beta_iterations: beta.iterations,
            eta_iterations: eta.iterations,
            beta_kkt: beta.kkt_residual,
            eta_kkt: eta.kkt_residual,
            beta_nnz,
            beta_groups,
            eta_nnz,
            eta_groups,
            sparsity_bound: self.sparsity_bound,
            sparsity_ok: self.sparsity_bound.map(|b| eta_groups as f64 <= b),
            covered: None,
            t_stat: None,
            risk_lhs: None,
            risk_rhs: None,
            risk_ratio: None,
            risk_bound_holds: None,
        };
        match cfg.experiment {
            ExperimentKind::Coverage => {
                let mut a = DVector::zeros(g.p);
                a[self.truth.support.first().copied().unwrap_or(0)] = 1.0;
                let report = debiased_estimate(&dataset, bh, &self.cov, &a)?;
                record.covered = Some(report.covered);
                record.t_stat = Some(report.t_stat);
            }
            ExperimentKind::RiskIdentity => {
                let report =
                    risk_identity_check(&dataset, &self.cov, bh, et, &penalty, cfg.mc_inner, seed, cfg.t_param)?;
                record.risk_lhs = Some(report.lhs);
                record.risk_rhs = Some(report.rhs);
                record.risk_ratio = report.ratio;
                record.risk_bound_holds = Some(report.bound_holds);
            }
            _ => {}
        }
        let timing = Timing {
            point: self.index,
            rep,
            beta_seconds,
            eta_seconds,
        };
        Ok((record, timing))
    }
}

/// Lower bound on the probability that both error vectors lie in the cone
/// tested by the records; none for the constrained estimator.
pub fn cone_probability(cfg: &ExperimentConfig, grid: &GridPoint) -> Option<f64> {
    match (cfg.penalty, grid.m) {
        (PenaltyKind::GroupLasso, Some(m)) => Some(group_cone_probability(cfg.xi, m, grid.s)),
        (PenaltyKind::L1, _) => Some(lasso_cone_probability(cfg.xi, grid.p, grid.s)),
        _ => None,
    }
}

/// Records, timings and summaries of a finished experiment.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<ReplicationRecord>,
    pub timings: Vec<Timing>,
    pub summary: Value,
    pub rate_fits: Vec<(String, RateFit)>,
    /// Replications where either solver did not converge.
    pub failures: usize,
    pub failure_fraction: f64,
}

impl ExperimentOutput {
    pub fn failures_exceed(&self, max_fraction: f64) -> bool {
        self.failure_fraction > max_fraction
    }
}

/// Runs every replication of every grid point on `config.threads` workers.
pub fn run_replications(cfg: &ExperimentConfig) -> Result<(Vec<ReplicationRecord>, Vec<Timing>)> {
    cfg.validate()?;
    let contexts = cfg
        .grid
        .iter()
        .enumerate()
        .map(|(i, g)| PointContext::new(cfg, i, *g))
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(usize, usize)> = (0..contexts.len())
        .flat_map(|p| (0..cfg.replications).map(move |r| (p, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} worker threads: {e}", cfg.threads)))?;
    let results: Vec<(ReplicationRecord, Timing)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, r)| contexts[p].replicate(cfg, r))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(results.into_iter().unzip())
}

/// Runs the experiment and writes `records.csv`, `timings.csv`,
/// `summary.json`, `rates.csv` and `plots/*.csv` under `config.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (records, timings) = run_replications(cfg)?;
    let output = summarize(cfg, records, timings)?;
    write_outputs(cfg, &output)?;
    Ok(output)
}

/// Per-point medians of `metric` over converged records, paired with `r_n`.
pub fn median_series(records: &[ReplicationRecord], metric: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for p in point_indices(records) {
        let group: Vec<&ReplicationRecord> =
            records.iter().filter(|r| r.point == p && r.converged()).collect();
        let mut values = Vec::new();
        for r in &group {
            values.extend(metric_value(r, metric)?);
        }
        if let (Some(first), Some(m)) = (group.first(), median(&values)) {
            out.push((first.r_n, m));
        }
    }
    Ok(out)
}

/// Fit of the median of `metric` against `r_n` across grid points.
pub fn fit_records(records: &[ReplicationRecord], metric: &str) -> Result<RateFit> {
    let series = median_series(records, metric)?;
    let (rates, metrics): (Vec<f64>, Vec<f64>) = series.into_iter().unzip();
    rate_fit(&rates, &metrics)
}

fn point_indices(records: &[ReplicationRecord]) -> Vec<usize> {
    let mut points: Vec<usize> = records.iter().map(|r| r.point).collect();
    points.sort_unstable();
    points.dedup();
    points
}

fn metric_value(r: &ReplicationRecord, metric: &str) -> Result<Option<f64>> {
    Ok(match metric {
        "diff_sigma" => Some(r.diff_sigma),
        "diff_k" => Some(r.diff_k),
        "err_beta_k" => Some(r.err_beta_k),
        "err_eta_k" => Some(r.err_eta_k),
        "ratio" => r.ratio,
        "risk_ratio" => r.risk_ratio,
        "t_stat" => r.t_stat,
        other => return Err(Error::arg(format!("unknown metric '{other}'"))),
    })
}

#[derive(Serialize)]
struct PointSummary {
    point: usize,
    n: usize,
    p: usize,
    s: usize,
    m: usize,
    d: usize,
    r_n: f64,
    replications: usize,
    converged: usize,
    failures: usize,
    metrics: serde_json::Map<String, Value>,
    frequencies: serde_json::Map<String, Value>,
    cone_probability_bound: Option<f64>,
    risk_bound_probability: Option<f64>,
}

fn summarize(
    cfg: &ExperimentConfig,
    records: Vec<ReplicationRecord>,
    timings: Vec<Timing>,
) -> Result<ExperimentOutput> {
    let failures = records.iter().filter(|r| !r.converged()).count();
    let failure_fraction = failures as f64 / records.len().max(1) as f64;
    if failures > 0 {
        log::warn!("{failures} of {} replications did not converge", records.len());
    }
    let mut points = Vec::new();
    for (p, grid) in cfg.grid.iter().enumerate() {
        let all: Vec<&ReplicationRecord> = records.iter().filter(|r| r.point == p).collect();
        let ok: Vec<&ReplicationRecord> = all.iter().copied().filter(|r| r.converged()).collect();
        let mut metrics = serde_json::Map::new();
        for name in ["err_beta_k", "err_eta_k", "diff_k", "diff_sigma", "ratio", "risk_ratio", "t_stat"] {
            let values: Vec<f64> = ok
                .iter()
                .filter_map(|r| metric_value(r, name).ok().flatten())
                .collect();
            if let Some(q) = Quantiles::of(&values) {
                metrics.insert(name.into(), serde_json::to_value(q)?);
            }
        }
        let mut frequencies = serde_json::Map::new();
        let mut freq = |name: &str, flags: Vec<bool>| -> Result<()> {
            if let Some(f) = Frequency::of(flags) {
                frequencies.insert(name.into(), serde_json::to_value(f)?);
            }
            Ok(())
        };
        freq("cone_beta", ok.iter().map(|r| r.cone_beta).collect())?;
        freq("cone_eta", ok.iter().map(|r| r.cone_eta).collect())?;
        freq("cone_both", ok.iter().map(|r| r.cone_beta && r.cone_eta).collect())?;
        freq("sparsity_ok", ok.iter().filter_map(|r| r.sparsity_ok).collect())?;
        freq("covered", ok.iter().filter_map(|r| r.covered).collect())?;
        freq("risk_bound_holds", ok.iter().filter_map(|r| r.risk_bound_holds).collect())?;
        freq(
            "risk_ratio_within_0.15",
            ok.iter().filter_map(|r| r.risk_ratio.map(|v| (v - 1.0).abs() <= 0.15)).collect(),
        )?;
        let (m, d) = all.first().map_or((grid.p, 1), |r| (r.m, r.d));
        points.push(PointSummary {
            point: p,
            n: grid.n,
            p: grid.p,
            s: grid.s,
            m,
            d,
            r_n: all.first().map_or(f64::NAN, |r| r.r_n),
            replications: all.len(),
            converged: ok.len(),
            failures: all.len() - ok.len(),
            metrics,
            frequencies,
            cone_probability_bound: cone_probability(cfg, grid),
            risk_bound_probability: (cfg.experiment == ExperimentKind::RiskIdentity)
                .then(|| 1.0 - 2.0 * (-cfg.t_param * cfg.t_param / 2.0).exp()),
        });
    }
    let rate_fits: Vec<(String, RateFit)> = if cfg.grid.len() >= 3 {
        RATE_METRICS
            .iter()
            .filter_map(|m| fit_records(&records, m).ok().map(|f| (m.to_string(), f)))
            .collect()
    } else {
        Vec::new()
    };
    let ok_records = records.iter().filter(|r| r.converged());
    let coverage = Frequency::of(ok_records.clone().filter_map(|r| r.covered));
    let mut summary = json!({
        "experiment": cfg.experiment,
        "config": cfg,
        "rate_check_only": cfg.design != DesignKind::Gaussian,
        "records": records.len(),
        "failures": failures,
        "failure_fraction": failure_fraction,
        "points": points,
        "rate_fits": rate_fits.iter().map(|(m, f)| (m.clone(), serde_json::to_value(f).unwrap_or(Value::Null))).collect::<serde_json::Map<_, _>>(),
    });
    if let Some(c) = coverage {
        summary["coverage"] = serde_json::to_value(c)?;
    }
    Ok(ExperimentOutput {
        records,
        timings,
        summary,
        rate_fits,
        failures,
        failure_fraction,
    })
}

fn write_outputs(cfg: &ExperimentConfig, out: &ExperimentOutput) -> Result<()> {
    let dir = &cfg.output_dir;
    let plots = dir.join("plots");
    fs::create_dir_all(&plots).map_err(|e| Error::io(&plots, e))?;
    write_records(&dir.join("records.csv"), &out.records)?;
    write_timings(&dir.join("timings.csv"), &out.timings)?;
    let summary_path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&out.summary)?;
    fs::write(&summary_path, text + "\n").map_err(|e| Error::io(&summary_path, e))?;
    write_rates(&dir.join("rates.csv"), &out.rate_fits)?;
    write_plots(&plots, &out.records)
}

fn write_rates(path: &Path, fits: &[(String, RateFit)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    w.write_record(["metric", "slope", "intercept", "stderr", "points"])?;
    for (m, f) in fits {
        w.write_record([
            m.clone(),
            format!("{:.16e}", f.slope),
            format!("{:.16e}", f.intercept),
            format!("{:.16e}", f.stderr),
            f.points.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One file per metric and quantile level, columns `r_n` and the value.
fn write_plots(dir: &Path, records: &[ReplicationRecord]) -> Result<()> {
    for metric in ["diff_sigma", "diff_k", "err_beta_k", "ratio"] {
        for level in QUANTILE_LEVELS {
            let path = dir.join(format!("{metric}_q{:02}.csv", (level * 100.0).round() as u32));
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
            w.write_record(["r_n", metric])?;
            for p in point_indices(records) {
                let group: Vec<&ReplicationRecord> =
                    records.iter().filter(|r| r.point == p && r.converged()).collect();
                let values: Vec<f64> = group
                    .iter()
                    .filter_map(|r| metric_value(r, metric).ok().flatten())
                    .collect();
                if let (Some(first), Some(q)) = (group.first(), quantile(&values, level)) {
                    w.write_record([format!("{:.16e}", first.r_n), format!("{q:.16e}")])?;
                }
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::records::read_records;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(
            kind,
            vec![GridPoint {
                n: 60,
                p: 40,
                s: 2,
                m: None,
                d: None,
            }],
        );
        cfg.replications = 3;
        cfg.master_seed = 11;
        cfg.threads = 1;
        cfg.mc_inner = 200;
        cfg
    }

    #[test]
    fn rerun_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(ExperimentKind::Rates);
        cfg.output_dir = dir.path().join("a");
        run_experiment(&cfg).unwrap();
        cfg.output_dir = dir.path().join("b");
        cfg.threads = 2;
        run_experiment(&cfg).unwrap();
        let a = fs::read(dir.path().join("a/records.csv")).unwrap();
        let b = fs::read(dir.path().join("b/records.csv")).unwrap();
        assert_eq!(a, b);
        assert_eq!(read_records(&dir.path().join("a/records.csv")).unwrap().len(), 3);
    }

    #[test]
    fn records_satisfy_their_invariants() {
        for kind in [ExperimentKind::Coverage, ExperimentKind::RiskIdentity, ExperimentKind::SparsityCheck] {
            let (records, _) = run_replications(&small(kind)).unwrap();
            for r in &records {
                if let Some(ratio) = r.ratio {
                    assert_eq!(ratio, r.diff_k / (r.err_beta_k + r.err_eta_k));
                }
                assert!(!r.converged() || (r.beta_kkt <= 1e-8 && r.eta_kkt <= 1e-8));
                assert_eq!(r.covered.is_some(), kind == ExperimentKind::Coverage);
                assert_eq!(r.risk_lhs.is_some(), kind == ExperimentKind::RiskIdentity);
                assert_eq!(r.sparsity_ok.is_some(), kind == ExperimentKind::SparsityCheck);
            }
        }
    }

    #[test]
    fn summary_frequencies_match_record_counts() {
        let mut cfg = small(ExperimentKind::Coverage);
        cfg.replications = 8;
        let (records, timings) = run_replications(&cfg).unwrap();
        let out = summarize(&cfg, records.clone(), timings).unwrap();
        let covered = records.iter().filter(|r| r.converged() && r.covered == Some(true)).count();
        assert_eq!(out.summary["coverage"]["count"], covered);
        assert_eq!(out.summary["coverage"]["total"], 8);
        let cones = records.iter().filter(|r| r.cone_beta).count();
        assert_eq!(out.summary["points"][0]["frequencies"]["cone_beta"]["count"], cones);
    }

    #[test]
    fn logistic_group_runs() {
        let mut cfg = small(ExperimentKind::SparsityCheck);
        cfg.loss = LossKind::Logistic;
        cfg.penalty = PenaltyKind::GroupLasso;
        cfg.grid = vec![GridPoint {
            n: 80,
            p: 40,
            s: 2,
            m: Some(10),
            d: Some(4),
        }];
        let (records, _) = run_replications(&cfg).unwrap();
        assert!(records.iter().all(|r| r.sigma_star == 0.5 && r.m == 10 && r.d == 4));
        assert!(records.iter().all(|r| r.converged()));
    }
}
