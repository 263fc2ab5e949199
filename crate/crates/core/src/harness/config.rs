//! Flat `key = value` experiment configuration.
//!
//! One key per line; `#` starts a comment. Keys:
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `experiment` | `rates`, `risk_identity`, `coverage`, `cone_check`, `sparsity_check` or `fit` | required |
//! | `grid` | `n,p,s` or `n,p,s,M,d` entries separated by `;` | required |
//! | `loss` | `squared` or `logistic` | `squared` |
//! | `penalty` | `l1`, `l1_ball` or `group_lasso` | `l1` |
//! | `design` | `gaussian` or `rademacher` | `gaussian` |
//! | `covariance` | `identity` or `ar1:<rho>` | `identity` |
//! | `xi` | tuning constant of the penalty level | `0.5` |
//! | `replications` | replications per grid point | `10` |
//! | `master_seed` | root of all per-task seeds | `0` |
//! | `output_dir` | directory for the output files | `out` |
//! | `mc_inner` | Monte Carlo draws inside one replication | `2000` |
//! | `threads` | worker threads, `0` for all cores | `0` |
//! | `tol` | KKT tolerance of the solvers | `1e-8` |
//! | `beta_value` | value of the nonzero coefficients | `1.0` |
//! | `noise_sd` | standard deviation of the linear-model noise | `1.0` |
//! | `t_param` | deviation parameter of the risk-identity bound | `2.0` |
//! | `max_failure_fraction` | tolerated fraction of non-converged fits | `0.0` |
//! | `c_max` | operator-norm bound on `K` in the sparsity constant | `1.0` |
//!
//! For `group_lasso`, `s` counts nonzero groups and `M, d` are required.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::model::DesignKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Rates,
    RiskIdentity,
    Coverage,
    ConeCheck,
    SparsityCheck,
    Fit,
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rates" => ExperimentKind::Rates,
            "risk_identity" => ExperimentKind::RiskIdentity,
            "coverage" => ExperimentKind::Coverage,
            "cone_check" => ExperimentKind::ConeCheck,
            "sparsity_check" => ExperimentKind::SparsityCheck,
            "fit" => ExperimentKind::Fit,
            other => return Err(Error::Config(format!("unknown experiment '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    L1,
    L1Ball,
    GroupLasso,
}

impl FromStr for PenaltyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "l1" => PenaltyKind::L1,
            "l1_ball" => PenaltyKind::L1Ball,
            "group_lasso" => PenaltyKind::GroupLasso,
            other => return Err(Error::Config(format!("unknown penalty '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridPoint {
    pub n: usize,
    pub p: usize,
    /// Nonzero coordinates, or nonzero groups for group penalties.
    pub s: usize,
    pub m: Option<usize>,
    pub d: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub grid: Vec<GridPoint>,
    pub loss: LossKind,
    pub penalty: PenaltyKind,
    pub design: DesignKind,
    pub covariance: String,
    pub xi: f64,
    pub replications: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub mc_inner: usize,
    pub threads: usize,
    pub tol: f64,
    pub beta_value: f64,
    pub noise_sd: f64,
    pub t_param: f64,
    pub max_failure_fraction: f64,
    pub c_max: f64,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, grid: Vec<GridPoint>) -> Self {
        ExperimentConfig {
            experiment,
            grid,
            loss: LossKind::Squared,
            penalty: PenaltyKind::L1,
            design: DesignKind::Gaussian,
            covariance: "identity".into(),
            xi: 0.5,
            replications: 10,
            master_seed: 0,
            output_dir: PathBuf::from("out"),
            mc_inner: 2000,
            threads: 0,
            tol: 1e-8,
            beta_value: 1.0,
            noise_sd: 1.0,
            t_param: 2.0,
            max_failure_fraction: 0.0,
            c_max: 1.0,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value', got '{line}'", lineno + 1))
            })?;
            pairs.push((lineno + 1, key.trim().to_string(), value.trim().to_string()));
        }
        let find = |k: &str| pairs.iter().find(|(_, key, _)| key == k).map(|(_, _, v)| v.as_str());
        let experiment = find("experiment")
            .ok_or_else(|| Error::Config("missing key 'experiment'".into()))?
            .parse()?;
        let grid = parse_grid(find("grid").ok_or_else(|| Error::Config("missing key 'grid'".into()))?)?;
        let mut cfg = ExperimentConfig::new(experiment, grid);
        let mut seen = std::collections::HashSet::new();
        for (lineno, key, value) in &pairs {
            if !seen.insert(key.clone()) {
                return Err(Error::Config(format!("line {lineno}: duplicate key '{key}'")));
            }
            let bad = |what: &str| Error::Config(format!("line {lineno}: invalid {what} '{value}'"));
            match key.as_str() {
                "experiment" | "grid" => {}
                "loss" => cfg.loss = value.parse().map_err(|_| bad("loss"))?,
                "penalty" => cfg.penalty = value.parse()?,
                "design" => cfg.design = value.parse().map_err(|_| bad("design"))?,
                "covariance" => cfg.covariance = value.clone(),
                "xi" => cfg.xi = value.parse().map_err(|_| bad("xi"))?,
                "replications" => cfg.replications = value.parse().map_err(|_| bad("replications"))?,
                "master_seed" => cfg.master_seed = value.parse().map_err(|_| bad("master_seed"))?,
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "mc_inner" => cfg.mc_inner = value.parse().map_err(|_| bad("mc_inner"))?,
                "threads" => cfg.threads = value.parse().map_err(|_| bad("threads"))?,
                "tol" => cfg.tol = value.parse().map_err(|_| bad("tol"))?,
                "beta_value" => cfg.beta_value = value.parse().map_err(|_| bad("beta_value"))?,
                "noise_sd" => cfg.noise_sd = value.parse().map_err(|_| bad("noise_sd"))?,
                "t_param" => cfg.t_param = value.parse().map_err(|_| bad("t_param"))?,
                "max_failure_fraction" => {
                    cfg.max_failure_fraction = value.parse().map_err(|_| bad("max_failure_fraction"))?
                }
                "c_max" => cfg.c_max = value.parse().map_err(|_| bad("c_max"))?,
                other => return Err(Error::Config(format!("line {lineno}: unknown key '{other}'"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.grid.is_empty() {
            return fail("grid must contain at least one point".into());
        }
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if !(self.xi > 0.0) {
            return fail(format!("xi must be positive, got {}", self.xi));
        }
        if !(self.tol > 0.0) || self.mc_inner == 0 {
            return fail("tol and mc_inner must be positive".into());
        }
        if !(self.noise_sd >= 0.0) || !(self.beta_value != 0.0 && self.beta_value.is_finite()) {
            return fail("noise_sd must be >= 0 and beta_value nonzero".into());
        }
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            return fail("max_failure_fraction must lie in [0, 1]".into());
        }
        if !(self.c_max > 0.0) {
            return fail("c_max must be positive".into());
        }
        if !(self.covariance == "identity" || self.covariance.starts_with("ar1:")) {
            return fail(format!("unknown covariance '{}'", self.covariance));
        }
        if self.loss == LossKind::Logistic && self.design != DesignKind::Gaussian {
            return fail("the logistic curvature matrix is only available for a gaussian design".into());
        }
        if self.experiment == ExperimentKind::RiskIdentity
            && (self.loss != LossKind::Squared
                || self.design != DesignKind::Gaussian
                || self.covariance != "identity")
        {
            return fail("risk_identity needs the squared loss, a gaussian design and identity covariance".into());
        }
        if self.experiment == ExperimentKind::Coverage && self.loss != LossKind::Squared {
            return fail("coverage needs the squared loss".into());
        }
        for (i, g) in self.grid.iter().enumerate() {
            if g.n == 0 || g.s == 0 {
                return fail(format!("grid point {i}: n and s must be positive"));
            }
            match self.penalty {
                PenaltyKind::GroupLasso => {
                    let (Some(m), Some(d)) = (g.m, g.d) else {
                        return fail(format!("grid point {i}: group_lasso needs M and d"));
                    };
                    if m * d != g.p {
                        return fail(format!("grid point {i}: p = {} but M*d = {}", g.p, m * d));
                    }
                    if g.s >= m {
                        return fail(format!("grid point {i}: need s < M"));
                    }
                }
                _ => {
                    if g.s >= g.p {
                        return fail(format!("grid point {i}: need s < p"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn parse_grid(text: &str) -> Result<Vec<GridPoint>> {
    text.split(';')
        .map(str::trim)
        .filter(|e| !e.is_empty())
        .map(|entry| {
            let nums = entry
                .split(',')
                .map(|v| v.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Config(format!("grid entry '{entry}' is not a list of integers")))?;
            match nums.as_slice() {
                [n, p, s] => Ok(GridPoint { n: *n, p: *p, s: *s, m: None, d: None }),
                [n, p, s, m, d] => Ok(GridPoint { n: *n, p: *p, s: *s, m: Some(*m), d: Some(*d) }),
                _ => Err(Error::Config(format!("grid entry '{entry}' needs 3 or 5 integers"))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let cfg = ExperimentConfig::parse(
            "# rates\nexperiment = rates\ngrid = 400,800,5; 800,1600,5\nxi = 0.1 # trailing\n\
             replications = 3\nmaster_seed = 42\npenalty = l1_ball\ncovariance = ar1:0.3\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Rates);
        assert_eq!(cfg.grid.len(), 2);
        assert_eq!(cfg.grid[1].p, 1600);
        assert_eq!(cfg.xi, 0.1);
        assert_eq!(cfg.penalty, PenaltyKind::L1Ball);
        assert_eq!(cfg.master_seed, 42);
    }

    #[test]
    fn rejects_invalid_configs() {
        let bad = [
            "grid = 10,20,2",
            "experiment = rates",
            "experiment = rates\ngrid = 10,20,2\nfoo = 1",
            "experiment = rates\ngrid = 10,20,20",
            "experiment = rates\ngrid = 10,20,2\npenalty = group_lasso",
            "experiment = rates\ngrid = 10,20,5,5,4\npenalty = group_lasso\n",
            "experiment = rates\ngrid = 10,20,2\nreplications = 0",
            "experiment = rates\ngrid = 10,20,2\nxi = 1\nxi = 2",
            "experiment = nope\ngrid = 10,20,2",
        ];
        for text in bad {
            assert!(matches!(ExperimentConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
        assert!(ExperimentConfig::parse("experiment = rates\ngrid = 10,20,2,10,2\npenalty = group_lasso").is_ok());
    }
}
