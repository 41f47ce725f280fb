//! Maximum-likelihood calibration through the Kalman filter likelihood.
//!
//! Free parameters are optimized in a transform space: mean-reversion
//! speeds, diffusions and the measurement variance on a log scale, long-run
//! means and the market price of risk as they are. The search is a
//! Nelder-Mead simplex run from the configured guess plus seeded random
//! restarts around it.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::ModelParams;
use crate::data_io::{YieldPanel, DAILY_DT};
use crate::error::{Error, Result};
use crate::kalman::{log_likelihood, FilterInit};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::state_space::build_system;

/// Parameters that can be estimated. `Zeta1` ties the two mean-reversion
/// speeds to a single value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeParam {
    MuR,
    MuLambda,
    Zeta1R,
    Zeta1Lambda,
    Zeta1,
    Zeta2R,
    Zeta2Lambda,
    Kappa11,
    Kappa12,
    Theta1,
    HMeas,
}

impl FreeParam {
    pub fn name(self) -> &'static str {
        match self {
            FreeParam::MuR => "mu_r",
            FreeParam::MuLambda => "mu_lambda",
            FreeParam::Zeta1R => "zeta1_r",
            FreeParam::Zeta1Lambda => "zeta1_lambda",
            FreeParam::Zeta1 => "zeta1",
            FreeParam::Zeta2R => "zeta2_r",
            FreeParam::Zeta2Lambda => "zeta2_lambda",
            FreeParam::Kappa11 => "kappa11",
            FreeParam::Kappa12 => "kappa12",
            FreeParam::Theta1 => "theta1",
            FreeParam::HMeas => "h_meas",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        const ALL: [FreeParam; 11] = [
            FreeParam::MuR,
            FreeParam::MuLambda,
            FreeParam::Zeta1R,
            FreeParam::Zeta1Lambda,
            FreeParam::Zeta1,
            FreeParam::Zeta2R,
            FreeParam::Zeta2Lambda,
            FreeParam::Kappa11,
            FreeParam::Kappa12,
            FreeParam::Theta1,
            FreeParam::HMeas,
        ];
        ALL.into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::InvalidInput(format!("unknown parameter {s:?}")))
    }

    fn log_scale(self) -> bool {
        !matches!(self, FreeParam::MuR | FreeParam::MuLambda | FreeParam::Theta1)
    }

    pub fn value(self, p: &ModelParams) -> f64 {
        match self {
            FreeParam::MuR => p.mu_r,
            FreeParam::MuLambda => p.mu_lambda,
            FreeParam::Zeta1R | FreeParam::Zeta1 => p.zeta1_r,
            FreeParam::Zeta1Lambda => p.zeta1_lambda,
            FreeParam::Zeta2R => p.zeta2_r,
            FreeParam::Zeta2Lambda => p.zeta2_lambda,
            FreeParam::Kappa11 => p.kappa11,
            FreeParam::Kappa12 => p.kappa12,
            FreeParam::Theta1 => p.theta1,
            FreeParam::HMeas => p.h_meas,
        }
    }

    pub fn set(self, p: &mut ModelParams, v: f64) {
        match self {
            FreeParam::MuR => p.mu_r = v,
            FreeParam::MuLambda => p.mu_lambda = v,
            FreeParam::Zeta1R => p.zeta1_r = v,
            FreeParam::Zeta1Lambda => p.zeta1_lambda = v,
            FreeParam::Zeta1 => {
                p.zeta1_r = v;
                p.zeta1_lambda = v;
            }
            FreeParam::Zeta2R => p.zeta2_r = v,
            FreeParam::Zeta2Lambda => p.zeta2_lambda = v,
            FreeParam::Kappa11 => p.kappa11 = v,
            FreeParam::Kappa12 => p.kappa12 = v,
            FreeParam::Theta1 => p.theta1 = v,
            FreeParam::HMeas => p.h_meas = v,
        }
    }

    fn to_transform(self, v: f64) -> f64 {
        if self.log_scale() {
            v.ln()
        } else {
            v
        }
    }

    fn untransform(self, u: f64) -> f64 {
        if self.log_scale() {
            u.exp()
        } else {
            u
        }
    }

    /// d(natural) / d(transform).
    fn jacobian(self, u: f64) -> f64 {
        if self.log_scale() {
            u.exp()
        } else {
            1.0
        }
    }
}

fn default_restarts() -> usize {
    5
}
fn default_tol() -> f64 {
    1e-6
}
fn default_max_iter() -> usize {
    4000
}
fn default_dt() -> f64 {
    DAILY_DT
}
fn default_spread() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    pub free: Vec<FreeParam>,
    /// Starting point; fixed parameters keep these values.
    pub initial: ModelParams,
    /// Total number of starts; the first uses `initial` as given.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Absolute log-likelihood tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    /// Observation interval of the panel in years.
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Standard deviation of the restart perturbation in transform space.
    #[serde(default = "default_spread")]
    pub restart_spread: f64,
}

impl CalibrationConfig {
    pub fn new(free: Vec<FreeParam>, initial: ModelParams) -> Self {
        CalibrationConfig {
            free,
            initial,
            restarts: default_restarts(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            seed: 0,
            dt: default_dt(),
            restart_spread: default_spread(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.free.is_empty() {
            return Err(Error::InvalidInput("at least one free parameter is required".into()));
        }
        for (i, p) in self.free.iter().enumerate() {
            if self.free[..i].contains(p) {
                return Err(Error::InvalidInput(format!("{} listed twice", p.name())));
            }
        }
        if self.free.contains(&FreeParam::Zeta1)
            && (self.free.contains(&FreeParam::Zeta1R) || self.free.contains(&FreeParam::Zeta1Lambda))
        {
            return Err(Error::InvalidInput(
                "zeta1 ties both speeds; do not combine it with zeta1_r or zeta1_lambda".into(),
            ));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidInput(format!("tolerance must be > 0, got {}", self.tol)));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidInput("restarts must be >= 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be >= 1".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt must be > 0, got {}", self.dt)));
        }
        self.initial.validate()?;
        for p in &self.free {
            if p.log_scale() && p.value(&self.initial) <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "initial {} must be > 0 to be estimated on a log scale",
                    p.name()
                )));
            }
        }
        Ok(())
    }

    fn to_transform(&self, p: &ModelParams) -> Vec<f64> {
        self.free.iter().map(|f| f.to_transform(f.value(p))).collect()
    }

    fn untransform(&self, u: &[f64]) -> ModelParams {
        let mut p = self.initial;
        for (f, &v) in self.free.iter().zip(u) {
            f.set(&mut p, f.untransform(v));
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamEstimate {
    pub name: String,
    pub value: f64,
    /// `None` when the Hessian at the optimum is not negative definite.
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartSummary {
    pub index: usize,
    pub initial_loglik: f64,
    pub final_loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub params: ModelParams,
    pub estimates: Vec<ParamEstimate>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub best_restart: usize,
    pub restarts: Vec<RestartSummary>,
    pub warnings: Vec<String>,
}

/// Log-likelihood of `params` on `panel`, `-inf` when the filter fails.
pub fn panel_loglik(panel: &YieldPanel, params: &ModelParams, dt: f64) -> f64 {
    build_system(params, dt, &panel.tenors)
        .and_then(|sys| log_likelihood(&sys, panel, FilterInit::Stationary))
        .ok()
        .filter(|v| v.is_finite())
        .unwrap_or(f64::NEG_INFINITY)
}

/// Parameters that one maturity can pin down: level, persistence, factor
/// variance and noise variance.
const SINGLE_TENOR_CAPACITY: usize = 4;

pub fn calibrate(panel: &YieldPanel, config: &CalibrationConfig) -> Result<CalibrationResult> {
    config.validate()?;
    let needed = 2 * config.free.len();
    if panel.observed_steps() < needed {
        return Err(Error::InvalidInput(format!(
            "panel has {} observed steps; {} free parameters need at least {needed}",
            panel.observed_steps(),
            config.free.len()
        )));
    }
    let mut warnings = Vec::new();
    if panel.tenors.len() == 1 && config.free.len() > SINGLE_TENOR_CAPACITY {
        warnings.push(format!(
            "{} free parameters but a single maturity identifies at most {SINGLE_TENOR_CAPACITY}",
            config.free.len()
        ));
    }

    let u0 = config.to_transform(&config.initial);
    let objective = |u: &[f64]| -> f64 {
        if u.iter().any(|v| !v.is_finite() || v.abs() > 700.0) {
            return f64::INFINITY;
        }
        -panel_loglik(panel, &config.untransform(u), config.dt)
    };
    let initial_loglik = -objective(&u0);
    if !initial_loglik.is_finite() {
        return Err(Error::NonFiniteInitial {
            guess: serde_json::to_string(&config.initial)?,
        });
    }

    let opts = NelderMeadOptions {
        max_iter: config.max_iter,
        f_tol: config.tol,
        step: u0.iter().map(|u| 0.1 * u.abs().max(1.0)).collect(),
    };

    let runs: Vec<Option<(RestartSummary, Vec<f64>)>> = (0..config.restarts)
        .into_par_iter()
        .map(|index| {
            let start = if index == 0 {
                u0.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(index as u64);
                let mut found = None;
                for _ in 0..20 {
                    let cand: Vec<f64> = u0
                        .iter()
                        .map(|u| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            u + config.restart_spread * z
                        })
                        .collect();
                    if objective(&cand).is_finite() {
                        found = Some(cand);
                        break;
                    }
                }
                found?
            };
            let start_loglik = -objective(&start);
            let min = nelder_mead(objective, &start, &opts);
            Some((
                RestartSummary {
                    index,
                    initial_loglik: start_loglik,
                    final_loglik: -min.value,
                    iterations: min.iterations,
                    converged: min.converged,
                },
                min.x,
            ))
        })
        .collect();

    let mut best: Option<(RestartSummary, Vec<f64>)> = None;
    let mut summaries = Vec::new();
    for (summary, x) in runs.into_iter().flatten() {
        summaries.push(summary.clone());
        // Strict comparison keeps the lowest index on ties.
        if best.as_ref().is_none_or(|(b, _)| summary.final_loglik > b.final_loglik) {
            best = Some((summary, x));
        }
    }
    let (best_summary, best_u) = best.ok_or(Error::NotConverged {
        best_loglik: f64::NEG_INFINITY,
        iterations: 0,
        restart: 0,
    })?;
    if !summaries.iter().any(|s| s.converged) {
        return Err(Error::NotConverged {
            best_loglik: best_summary.final_loglik,
            iterations: best_summary.iterations,
            restart: best_summary.index,
        });
    }

    let params = config.untransform(&best_u);
    let std_errors = transform_std_errors(
        |u| -objective(u),
        &best_u,
        &config
            .free
            .iter()
            .zip(&best_u)
            .map(|(f, u)| f.jacobian(*u))
            .collect::<Vec<_>>(),
    );
    if std_errors.is_none() {
        warnings.push("Hessian at the optimum is not negative definite; standard errors unavailable".into());
    }
    let estimates = config
        .free
        .iter()
        .enumerate()
        .map(|(i, f)| ParamEstimate {
            name: f.name().to_string(),
            value: f.value(&params),
            std_error: std_errors.as_ref().map(|s| s[i]),
        })
        .collect();

    Ok(CalibrationResult {
        params,
        estimates,
        loglik: best_summary.final_loglik,
        iterations: best_summary.iterations,
        converged: best_summary.converged,
        best_restart: best_summary.index,
        restarts: summaries,
        warnings,
    })
}

/// Standard errors of the free parameters at `params`, in natural units.
/// Entries are `None` when the Hessian is not negative definite.
pub fn standard_errors(panel: &YieldPanel, config: &CalibrationConfig, params: &ModelParams) -> Vec<Option<f64>> {
    let mut local = config.clone();
    local.initial = *params;
    let u = local.to_transform(params);
    let jac: Vec<f64> = local.free.iter().zip(&u).map(|(f, u)| f.jacobian(*u)).collect();
    match transform_std_errors(|x| panel_loglik(panel, &local.untransform(x), local.dt), &u, &jac) {
        Some(se) => se.into_iter().map(Some).collect(),
        None => vec![None; local.free.len()],
    }
}

/// Central finite-difference Hessian of `f` at `x` with per-coordinate steps.
pub fn finite_difference_hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], steps: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let at = |di: Option<(usize, f64)>, dj: Option<(usize, f64)>| {
        let mut p = x.to_vec();
        for (k, d) in [di, dj].into_iter().flatten() {
            p[k] += d;
        }
        f(&p)
    };
    let f0 = f(x);
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let hi = steps[i];
        h[(i, i)] = (at(Some((i, hi)), None) - 2.0 * f0 + at(Some((i, -hi)), None)) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let v = (at(Some((i, hi)), Some((j, hj)))
                - at(Some((i, hi)), Some((j, -hj)))
                - at(Some((i, -hi)), Some((j, hj)))
                + at(Some((i, -hi)), Some((j, -hj))))
                / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// Delta-method standard errors from the inverse negative Hessian of a
/// log-likelihood in transform coordinates. `jacobian[i]` is
/// d(natural_i)/d(transform_i).
pub fn transform_std_errors<F: Fn(&[f64]) -> f64>(loglik: F, u: &[f64], jacobian: &[f64]) -> Option<Vec<f64>> {
    let steps: Vec<f64> = u.iter().map(|v| 1e-4 * v.abs().max(1.0)).collect();
    let h = finite_difference_hessian(loglik, u, &steps);
    if h.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let info = -h;
    let cov = info.cholesky()?.inverse();
    let se: Vec<f64> = (0..u.len()).map(|i| jacobian[i].abs() * cov[(i, i)].sqrt()).collect();
    se.iter().all(|v| v.is_finite()).then_some(se)
}
