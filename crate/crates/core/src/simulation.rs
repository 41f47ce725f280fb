//! Exact simulation of the factor process, synthetic yield panels and
//! Monte Carlo survival rates.
//!
//! Every path `i` draws from its own ChaCha8 stream derived from
//! `(seed, i)`, so results do not depend on how paths are scheduled.

use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::{FactorState, ModelParams};
use crate::data_io::{PanelSource, Units, YieldPanel};
use crate::error::{Error, Result};
use crate::kalman::{run_filter, FilterInit};
use crate::state_space::{build_system, stationary_moments, DiscreteSystem};

/// Mixed into the seed of the measurement-noise streams.
const NOISE_STREAM_KEY: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    Zero,
    /// Drawn from the stationary law of the factor.
    Stationary,
    Given(FactorState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub tenors: Vec<f64>,
    pub seed: u64,
    pub n_paths: usize,
    pub initial: InitialState,
    /// Date of the first simulated observation.
    pub start_date: NaiveDate,
}

impl SimulationConfig {
    pub fn new(dt: f64, n_steps: usize, tenors: Vec<f64>, seed: u64) -> Self {
        SimulationConfig {
            dt,
            n_steps,
            tenors,
            seed,
            n_paths: 1,
            initial: InitialState::Stationary,
            start_date: NaiveDate::from_ymd_opt(2000, 1, 3).unwrap(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidInput("n_steps must be >= 1".into()));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidInput("n_paths must be >= 1".into()));
        }
        Ok(())
    }

    /// Calendar spacing of synthetic observations: `dt` years rounded to
    /// whole days, at least one.
    fn step_days(&self) -> u64 {
        ((self.dt * 365.0).round() as u64).max(1)
    }
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn initial_state(params: &ModelParams, initial: InitialState, rng: &mut ChaCha8Rng) -> Result<FactorState> {
    Ok(match initial {
        InitialState::Zero => FactorState::ZERO,
        InitialState::Given(s) => s,
        InitialState::Stationary => {
            let (_, cov) = stationary_moments(params)?;
            FactorState::new(cov[(0, 0)].sqrt() * normal(rng), cov[(1, 1)].sqrt() * normal(rng))
        }
    })
}

fn state_path(system: &DiscreteSystem, config: &SimulationConfig, path: usize) -> Result<Vec<FactorState>> {
    let mut rng = path_rng(config.seed, path);
    let mut x = initial_state(&system.params, config.initial, &mut rng)?;
    let t = &system.transition;
    let sd_r = system.process_cov[(0, 0)].sqrt();
    let sd_l = system.process_cov[(1, 1)].sqrt();
    let mut out = Vec::with_capacity(config.n_steps);
    for _ in 0..config.n_steps {
        x = FactorState::new(
            t[(0, 0)] * x.x_r + sd_r * normal(&mut rng),
            t[(1, 1)] * x.x_lambda + sd_l * normal(&mut rng),
        );
        out.push(x);
    }
    Ok(out)
}

fn state_system(params: &ModelParams, config: &SimulationConfig) -> Result<DiscreteSystem> {
    config.validate()?;
    // The state equation does not depend on tenors; fall back to a dummy grid.
    let tenors = if config.tenors.is_empty() {
        vec![1.0]
    } else {
        config.tenors.clone()
    };
    build_system(params, config.dt, &tenors)
}

/// One exact state path `X_1..X_n` (path index 0).
pub fn simulate_states(params: &ModelParams, config: &SimulationConfig) -> Result<Vec<FactorState>> {
    simulate_state_path(params, config, 0)
}

pub fn simulate_state_path(params: &ModelParams, config: &SimulationConfig, path: usize) -> Result<Vec<FactorState>> {
    let system = state_system(params, config)?;
    state_path(&system, config, path)
}

/// `X_n` at the last step of each of the `n_paths` paths.
pub fn simulate_terminal_states(params: &ModelParams, config: &SimulationConfig) -> Result<Vec<FactorState>> {
    let system = state_system(params, config)?;
    (0..config.n_paths)
        .into_par_iter()
        .map(|i| state_path(&system, config, i).map(|p| *p.last().unwrap()))
        .collect()
}

/// A simulated panel together with what generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPanel {
    pub panel: YieldPanel,
    /// `d + Z X_n` before measurement noise.
    pub noiseless: Vec<Vec<f64>>,
    pub states: Vec<FactorState>,
}

pub fn simulate_panel(params: &ModelParams, config: &SimulationConfig) -> Result<SyntheticPanel> {
    config.validate()?;
    let system = build_system(params, config.dt, &config.tenors)?;
    let states = state_path(&system, config, 0)?;
    let mut noise_rng = path_rng(config.seed ^ NOISE_STREAM_KEY, 0);
    let sd = params.h_meas.sqrt();
    let step = config.step_days();

    let mut dates = Vec::with_capacity(states.len());
    let mut values = Vec::with_capacity(states.len());
    let mut noiseless = Vec::with_capacity(states.len());
    for (n, x) in states.iter().enumerate() {
        let clean: Vec<f64> = system.measure(x).iter().copied().collect();
        values.push(clean.iter().map(|y| Some(y + sd * normal(&mut noise_rng))).collect());
        noiseless.push(clean);
        let date = config
            .start_date
            .checked_add_days(Days::new(step * n as u64))
            .ok_or_else(|| Error::InvalidInput("simulated dates overflow the calendar".into()))?;
        dates.push(date);
    }
    let panel = YieldPanel::new(
        dates,
        config.tenors.clone(),
        values,
        PanelSource {
            file: None,
            units: Units::Decimal,
        },
    )?;
    Ok(SyntheticPanel {
        panel,
        noiseless,
        states,
    })
}

/// True, observed and filtered yield of the first tenor at each step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripleRow {
    pub date: NaiveDate,
    pub real: f64,
    pub observed: Option<f64>,
    pub filtered: f64,
}

/// Simulates a panel and runs the filter on it with the true parameters.
pub fn filter_experiment(params: &ModelParams, config: &SimulationConfig) -> Result<Vec<TripleRow>> {
    let synth = simulate_panel(params, config)?;
    let system = build_system(params, config.dt, &config.tenors)?;
    let out = run_filter(&system, &synth.panel, FilterInit::Stationary)?;
    Ok(out
        .steps
        .iter()
        .enumerate()
        .map(|(n, s)| TripleRow {
            date: synth.panel.dates[n],
            real: synth.noiseless[n][0],
            observed: synth.panel.values[n][0],
            filtered: system.intercept[0] + (system.loading.row(0) * s.filtered_mean)[0],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalRow {
    pub horizon: f64,
    pub mean: f64,
    pub std_error: f64,
    pub p05: f64,
    pub p95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalTable {
    pub rows: Vec<SurvivalRow>,
    pub n_paths: usize,
    /// Paths on which the simulated intensity dipped below zero.
    pub negative_lambda_paths: usize,
    pub negative_lambda_fraction: f64,
}

/// Linear interpolation between order statistics.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Survival rates `exp(-int lambda)` along simulated mortality paths
/// `lambda = mu_lambda - X^lambda`, integrated with the trapezoid rule.
///
/// The path is simulated exactly on the `dt` grid with each horizon
/// inserted as an extra node.
pub fn monte_carlo_survival(
    params: &ModelParams,
    config: &SimulationConfig,
    horizons: &[f64],
) -> Result<SurvivalTable> {
    config.validate()?;
    params.validate()?;
    if horizons.is_empty() {
        return Err(Error::InvalidInput("at least one horizon is required".into()));
    }
    for (i, &h) in horizons.iter().enumerate() {
        if !(h.is_finite() && h >= 0.0) || (i > 0 && h <= horizons[i - 1]) {
            return Err(Error::InvalidInput(
                "horizons must be finite, non-negative and strictly increasing".into(),
            ));
        }
    }

    // Grid nodes, each tagged with the horizon it closes (if any).
    let last = *horizons.last().unwrap();
    let mut nodes: Vec<(f64, Option<usize>)> = Vec::new();
    let mut k = 1usize;
    let mut hi = 0usize;
    while hi < horizons.len() && horizons[hi] == 0.0 {
        hi += 1;
    }
    loop {
        let t = k as f64 * config.dt;
        while hi < horizons.len() && horizons[hi] <= t * (1.0 + 1e-12) {
            let h = horizons[hi];
            if (h - t).abs() <= 1e-12 * t.max(1.0) {
                break;
            }
            nodes.push((h, Some(hi)));
            hi += 1;
        }
        if hi < horizons.len() && (horizons[hi] - t).abs() <= 1e-12 * t.max(1.0) {
            nodes.push((horizons[hi], Some(hi)));
            hi += 1;
        } else if t < last {
            nodes.push((t, None));
        }
        if hi >= horizons.len() {
            break;
        }
        k += 1;
    }
    // Exact OU coefficients for every distinct step length.
    let zeta = params.zeta1_lambda;
    let k2 = params.kappa11 * params.kappa11;
    let mut prev_t = 0.0;
    let steps: Vec<(f64, f64, f64, Option<usize>)> = nodes
        .iter()
        .map(|&(t, tag)| {
            let dt = t - prev_t;
            prev_t = t;
            let decay = (-zeta * dt).exp();
            let sd = (k2 * dt * crate::affine::h_func(2.0 * zeta * dt)).sqrt();
            (dt, decay, sd, tag)
        })
        .collect();

    let n_h = horizons.len();
    let mu = params.mu_lambda;
    let paths: Vec<(Vec<f64>, bool)> = (0..config.n_paths)
        .into_par_iter()
        .map(|i| -> Result<(Vec<f64>, bool)> {
            let mut rng = path_rng(config.seed, i);
            let mut x = initial_state(params, config.initial, &mut rng)?.x_lambda;
            let mut lam = mu - x;
            let mut negative = lam < 0.0;
            let mut integral = 0.0;
            let mut surv = vec![1.0; n_h];
            for &(dt, decay, sd, tag) in &steps {
                x = decay * x + sd * normal(&mut rng);
                let next = mu - x;
                negative |= next < 0.0;
                integral += 0.5 * dt * (lam + next);
                lam = next;
                if let Some(h) = tag {
                    surv[h] = (-integral).exp();
                }
            }
            Ok((surv, negative))
        })
        .collect::<Result<_>>()?;

    let n = paths.len() as f64;
    let rows = (0..n_h)
        .map(|h| {
            let mut vals: Vec<f64> = paths.iter().map(|(s, _)| s[h]).collect();
            let mean = vals.iter().sum::<f64>() / n;
            let var = if paths.len() > 1 {
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            vals.sort_by(f64::total_cmp);
            SurvivalRow {
                horizon: horizons[h],
                mean,
                std_error: (var / n).sqrt(),
                p05: percentile(&vals, 0.05),
                p95: percentile(&vals, 0.95),
            }
        })
        .collect();
    let negative_lambda_paths = paths.iter().filter(|(_, neg)| *neg).count();
    Ok(SurvivalTable {
        rows,
        n_paths: paths.len(),
        negative_lambda_paths,
        negative_lambda_fraction: negative_lambda_paths as f64 / n,
    })
}
