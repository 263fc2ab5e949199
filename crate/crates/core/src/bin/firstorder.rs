//! Command-line front end: dataset generation, single fits, diagnostics and
//! replicated experiments.
//!
//! Exit codes: 0 success, 1 other errors, 2 invalid configuration, 3 too many
//! non-converged fits.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde_json::json;

use firstorder::cones::{lambda_group, lambda_lasso};
use firstorder::diagnostics::{debiased_estimate, risk_identity_check};
use firstorder::error::{Error, Result};
use firstorder::harness::{fit_records, read_records, run_experiment, ExperimentConfig, PenaltyKind};
use firstorder::io::write_vector;
use firstorder::loss::{curvature_matrix, LossKind};
use firstorder::model::{
    generate_design, generate_linear, generate_logistic, sigma_star, CovarianceModel, Dataset, DesignKind,
    GroundTruth, GroupStructure, ModelKind,
};
use firstorder::penalty::PenaltySpec;
use firstorder::solver::{fit_beta_hat, fit_eta, SolverConfig, SolverResult};

#[derive(Parser)]
#[command(name = "firstorder", version, about = "Penalized M-estimators and their first-order expansions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dataset and write it to a directory.
    Generate(GenerateArgs),
    /// Solve the penalized estimation problem on a stored dataset.
    Fit(FitArgs),
    /// Solve the first-order expansion on a stored dataset.
    Expand(FitArgs),
    /// Compare the estimation error with the sequence-model prox risk.
    RiskIdentity(RiskArgs),
    /// De-biased estimate and 95% interval for one coordinate.
    Coverage(CoverageArgs),
    /// Run a replicated experiment from a config file.
    Experiment(ExperimentArgs),
    /// Fit log(median metric) against log(r_n) from a records file.
    RateFit(RateFitArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    /// Nonzero coefficients (the first `s`).
    #[arg(long)]
    s: usize,
    #[arg(long, default_value = "squared")]
    loss: LossKind,
    #[arg(long, default_value = "gaussian")]
    design: DesignKind,
    /// `identity` or `ar1:<rho>`.
    #[arg(long, default_value = "identity")]
    covariance: String,
    #[arg(long, default_value_t = 1.0)]
    beta_value: f64,
    #[arg(long, default_value_t = 1.0)]
    noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Dataset directory written by `generate`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "squared")]
    loss: LossKind,
    /// `l1`, `l1_ball` or `group_lasso`.
    #[arg(long, default_value = "l1")]
    penalty: String,
    /// Penalty level; defaults to the noise-dominating level for `xi`.
    #[arg(long)]
    lambda: Option<f64>,
    /// Ball radius; defaults to the l1 norm of the true coefficients.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 4)]
    group_size: usize,
    #[arg(long, default_value_t = 0.5)]
    xi: f64,
    /// Defaults to the covariance recorded by `generate`.
    #[arg(long)]
    covariance: Option<String>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Output directory for the solution and its summary.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RiskArgs {
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, default_value_t = 20_000)]
    mc: usize,
    #[arg(long, default_value_t = 2.0)]
    t: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CoverageArgs {
    #[command(flatten)]
    fit: FitArgs,
    /// Coordinate whose coefficient is estimated.
    #[arg(long, default_value_t = 0)]
    coordinate: usize,
}

#[derive(Args)]
struct ExperimentArgs {
    config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `threads`.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `tol`.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct RateFitArgs {
    records: PathBuf,
    #[arg(long, default_value = "diff_sigma")]
    metric: String,
}

const COVARIANCE_FILE: &str = "covariance.txt";

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Fit(a) => fit(a, false),
        Command::Expand(a) => fit(a, true),
        Command::RiskIdentity(a) => risk_identity(a),
        Command::Coverage(a) => coverage(a),
        Command::Experiment(a) => experiment(a),
        Command::RateFit(a) => {
            let records = read_records(&a.records)?;
            let fit = fit_records(&records, &a.metric)?;
            println!("{}", serde_json::to_string_pretty(&json!({ "metric": a.metric, "fit": fit }))?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn generate(a: GenerateArgs) -> Result<ExitCode> {
    let cov = CovarianceModel::from_spec(&a.covariance, a.p)?;
    let truth = GroundTruth::sparse(a.p, a.s, a.beta_value)?;
    let design = generate_design(&cov, a.n, a.design, a.seed)?;
    let data = match a.loss {
        LossKind::Squared => generate_linear(design, &truth.beta_star, a.noise_sd, a.seed)?,
        LossKind::Logistic => generate_logistic(design, &truth.beta_star, a.seed)?,
    };
    data.save(&a.out)?;
    let path = a.out.join(COVARIANCE_FILE);
    fs::write(&path, &a.covariance).map_err(|e| Error::Io { path, source: e })?;
    println!("wrote {} x {} dataset to {}", a.n, a.p, a.out.display());
    Ok(ExitCode::SUCCESS)
}

struct Problem {
    data: Dataset,
    cov: CovarianceModel,
    penalty: PenaltySpec,
    solver: SolverConfig,
}

fn load_problem(a: &FitArgs) -> Result<Problem> {
    let data = Dataset::load(&a.data)?;
    let spec = match &a.covariance {
        Some(s) => s.clone(),
        None => fs::read_to_string(a.data.join(COVARIANCE_FILE))
            .map(|s| s.trim().to_string())
            .unwrap_or_else(|_| "identity".into()),
    };
    let cov = CovarianceModel::from_spec(&spec, data.p())?;
    let (n, p) = (data.n(), data.p());
    let s = data.beta_star.iter().filter(|v| **v != 0.0).count().max(1);
    let sigma = match (a.loss, data.model_kind) {
        (LossKind::Squared, ModelKind::Linear) => sigma_star(&data)?,
        _ => 0.5,
    };
    let l = data.design_kind.subgaussian_constant();
    let kind: PenaltyKind = a.penalty.parse()?;
    let penalty = match kind {
        PenaltyKind::L1 => PenaltySpec::L1 {
            lambda: match a.lambda {
                Some(v) => v,
                None => lambda_lasso(a.loss, l, sigma, a.xi, p, s.min(p - 1), n)?,
            },
        },
        PenaltyKind::L1Ball => PenaltySpec::L1Ball {
            radius: a.radius.unwrap_or_else(|| data.beta_star.iter().map(|v| v.abs()).sum()),
        },
        PenaltyKind::GroupLasso => {
            let groups = GroupStructure::contiguous(p, a.group_size)?;
            let active = groups.iter().filter(|r| data.beta_star.rows(r.start, r.len()).iter().any(|v| *v != 0.0));
            let s_groups = active.count().clamp(1, groups.m.saturating_sub(1).max(1));
            let lambda = match a.lambda {
                Some(v) => v,
                None => lambda_group(l, sigma, a.xi, groups.d, groups.m, s_groups, n)?,
            };
            PenaltySpec::GroupLasso { lambda, groups }
        }
    };
    let solver = SolverConfig {
        kkt_tol: a.tol,
        ..SolverConfig::default()
    };
    Ok(Problem {
        data,
        cov,
        penalty,
        solver,
    })
}

fn solve_eta(pr: &Problem, loss: LossKind) -> Result<SolverResult> {
    let k = curvature_matrix(loss, &pr.cov, &pr.data.beta_star, pr.data.design_kind)?;
    fit_eta(&pr.data, loss, &k, &pr.data.beta_star, &pr.penalty, &pr.solver)
}

fn fit(a: FitArgs, expansion: bool) -> Result<ExitCode> {
    let pr = load_problem(&a)?;
    let result = if expansion {
        solve_eta(&pr, a.loss)?
    } else {
        fit_beta_hat(&pr.data, a.loss, &pr.penalty, &pr.solver)?
    };
    let report = json!({
        "estimate": if expansion { "eta" } else { "beta_hat" },
        "penalty": pr.penalty,
        "solver": result.summary(),
    });
    if let Some(out) = &a.out {
        fs::create_dir_all(out).map_err(|e| Error::Io { path: out.clone(), source: e })?;
        let name = if expansion { "eta" } else { "beta_hat" };
        write_vector(&out.join(format!("{name}.bin")), &result.solution)?;
        write_json(&out.join(format!("{name}.json")), &report)?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if result.converged { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn risk_identity(a: RiskArgs) -> Result<ExitCode> {
    let pr = load_problem(&a.fit)?;
    let beta = fit_beta_hat(&pr.data, a.fit.loss, &pr.penalty, &pr.solver)?;
    let eta = solve_eta(&pr, a.fit.loss)?;
    let report = risk_identity_check(
        &pr.data,
        &pr.cov,
        &beta.solution,
        &eta.solution,
        &pr.penalty,
        a.mc,
        a.seed,
        a.t,
    )?;
    let out = json!({ "report": report, "beta_hat": beta.summary(), "eta": eta.summary() });
    if let Some(dir) = &a.fit.out {
        fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
        write_json(&dir.join("risk_identity.json"), &out)?;
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(if beta.converged && eta.converged { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn coverage(a: CoverageArgs) -> Result<ExitCode> {
    let pr = load_problem(&a.fit)?;
    if a.coordinate >= pr.data.p() {
        return Err(Error::InvalidArgument(format!("coordinate {} out of range", a.coordinate)));
    }
    let beta = fit_beta_hat(&pr.data, a.fit.loss, &pr.penalty, &pr.solver)?;
    let mut dir = DVector::zeros(pr.data.p());
    dir[a.coordinate] = 1.0;
    let report = debiased_estimate(&pr.data, &beta.solution, &pr.cov, &dir)?;
    let out = json!({ "report": report, "beta_hat": beta.summary() });
    if let Some(d) = &a.fit.out {
        fs::create_dir_all(d).map_err(|e| Error::Io { path: d.clone(), source: e })?;
        write_json(&d.join("coverage.json"), &out)?;
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(if beta.converged { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn experiment(a: ExperimentArgs) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = a.threads {
        cfg.threads = t;
    }
    if let Some(o) = a.out {
        cfg.output_dir = o;
    }
    if let Some(t) = a.tol {
        cfg.tol = t;
    }
    cfg.validate()?;
    let out = run_experiment(&cfg)?;
    println!(
        "{} records written to {} ({} non-converged)",
        out.records.len(),
        cfg.output_dir.display(),
        out.failures
    );
    for (metric, fit) in &out.rate_fits {
        println!("rate fit {metric}: slope {:.4} +- {:.4}", fit.slope, fit.stderr);
    }
    if out.failures_exceed(cfg.max_failure_fraction) {
        eprintln!(
            "non-converged fraction {:.4} exceeds max_failure_fraction {}",
            out.failure_fraction, cfg.max_failure_fraction
        );
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}
