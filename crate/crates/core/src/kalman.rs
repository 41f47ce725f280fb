//! Linear Gaussian Kalman filter over a [`DiscreteSystem`].
//!
//! Prediction:
//! `m_{n|n-1} = T m_{n-1}`, `B_{n|n-1} = T B_{n-1} T' + V`.
//!
//! Update, on the observed sub-vector of `y_n`:
//! `v = y - (d + Z m_{n|n-1})`, `F = H + Z B_{n|n-1} Z'`,
//! `m_n = m_{n|n-1} + B Z' F^{-1} v`, `B_n = B - B Z' F^{-1} Z B`.
//!
//! The log-likelihood uses the innovation covariance `F`:
//! `-1/2 sum [k_n log(2 pi) + log|F_n| + v' F_n^{-1} v]` over observed steps.

use nalgebra::{DMatrix, DVector, Dyn, Matrix2, OMatrix, Vector2, U2};

use crate::data_io::YieldPanel;
use crate::error::{Error, Result};
use crate::state_space::{stationary_moments, DiscreteSystem, Loading};

const LN_2PI: f64 = 1.837_877_066_409_345_3;
/// Covariance inflation of the diffuse initialization.
pub const DIFFUSE_SCALE: f64 = 1e6;
/// Innovation covariances worse conditioned than this are treated as singular.
pub const MAX_CONDITION: f64 = 1e13;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    pub predicted_mean: Vector2<f64>,
    pub predicted_cov: Matrix2<f64>,
    pub filtered_mean: Vector2<f64>,
    pub filtered_cov: Matrix2<f64>,
    /// Indices of the tenors observed at this step.
    pub observed: Vec<usize>,
    /// Innovation over the observed tenors; `None` when nothing was observed.
    pub innovation: Option<DVector<f64>>,
    pub innovation_cov: Option<DMatrix<f64>>,
    pub step_loglik: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub steps: Vec<FilterStep>,
    pub total_loglik: f64,
}

/// Distribution of the state just before the first observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterInit {
    Stationary,
    /// Stationary covariance inflated by [`DIFFUSE_SCALE`].
    Diffuse,
    Given {
        mean: Vector2<f64>,
        cov: Matrix2<f64>,
    },
}

impl FilterInit {
    pub fn moments(&self, system: &DiscreteSystem) -> Result<(Vector2<f64>, Matrix2<f64>)> {
        match *self {
            FilterInit::Stationary => stationary_moments(&system.params),
            FilterInit::Diffuse => {
                let (m, c) = stationary_moments(&system.params)?;
                Ok((m, c * DIFFUSE_SCALE))
            }
            FilterInit::Given { mean, cov } => Ok((mean, cov)),
        }
    }
}

/// Result of a single measurement update.
#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
    pub observed: Vec<usize>,
    pub innovation: Option<DVector<f64>>,
    pub innovation_cov: Option<DMatrix<f64>>,
    /// `B Z' F^{-1}` (2 x observed).
    pub gain: Option<OMatrix<f64, U2, Dyn>>,
    pub step_loglik: f64,
}

fn symmetrize(m: &Matrix2<f64>) -> Matrix2<f64> {
    (m + m.transpose()) * 0.5
}

pub fn predict(
    prev_mean: &Vector2<f64>,
    prev_cov: &Matrix2<f64>,
    system: &DiscreteSystem,
) -> (Vector2<f64>, Matrix2<f64>) {
    let t = &system.transition;
    let mean = t * prev_mean;
    let cov = symmetrize(&(t * prev_cov * t.transpose() + system.process_cov));
    (mean, cov)
}

fn condition_number(f: &DMatrix<f64>) -> f64 {
    let eig = f.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Measurement update using only the observed entries of `obs`.
///
/// A singular innovation covariance is reported with `step = 0`;
/// [`run_filter`] replaces it with the actual step index.
pub fn update(
    pred_mean: &Vector2<f64>,
    pred_cov: &Matrix2<f64>,
    obs: &[Option<f64>],
    system: &DiscreteSystem,
) -> Result<Update> {
    let m = system.n_tenors();
    if obs.len() != m {
        return Err(Error::InvalidInput(format!(
            "observation has {} entries, system has {m} tenors",
            obs.len()
        )));
    }
    let observed: Vec<usize> = obs
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_some_and(f64::is_finite))
        .map(|(i, _)| i)
        .collect();
    if observed.is_empty() {
        return Ok(Update {
            mean: *pred_mean,
            cov: *pred_cov,
            observed,
            innovation: None,
            innovation_cov: None,
            gain: None,
            step_loglik: 0.0,
        });
    }

    let k = observed.len();
    let y = DVector::from_iterator(k, observed.iter().map(|&i| obs[i].unwrap()));
    let (z, d, h): (Loading, DVector<f64>, DMatrix<f64>) = if k == m {
        (
            system.loading.clone(),
            system.intercept.clone(),
            system.meas_cov.clone(),
        )
    } else {
        (
            system.loading.select_rows(&observed),
            system.intercept.select_rows(&observed),
            system.meas_cov.select_rows(&observed).select_columns(&observed),
        )
    };

    let v = y - (d + &z * pred_mean);
    let zb = &z * pred_cov;
    let mut f = &zb * z.transpose() + h;
    f = (&f + f.transpose()) * 0.5;

    let chol = match f.clone().cholesky() {
        Some(c) => c,
        None => {
            return Err(Error::SingularInnovation {
                step: 0,
                condition: condition_number(&f),
            })
        }
    };
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(*x), hi.max(*x)));
    // (hi / lo)^2 bounds the condition number from below; confirm before failing.
    if (hi / lo).powi(2) > MAX_CONDITION * 1e-3 {
        let condition = condition_number(&f);
        if condition > MAX_CONDITION {
            return Err(Error::SingularInnovation { step: 0, condition });
        }
    }
    let f_inv_v = chol.solve(&v);
    let f_inv_zb = chol.solve(&zb);
    let log_det: f64 = diag.iter().map(|x| 2.0 * x.ln()).sum();
    let quad = v.dot(&f_inv_v);
    let step_loglik = -0.5 * (k as f64 * LN_2PI + log_det + quad);
    if !step_loglik.is_finite() {
        return Err(Error::SingularInnovation {
            step: 0,
            condition: condition_number(&f),
        });
    }

    let mean = pred_mean + zb.transpose() * &f_inv_v;
    let cov = symmetrize(&(pred_cov - zb.transpose() * &f_inv_zb));
    let gain = f_inv_zb.transpose();

    Ok(Update {
        mean,
        cov,
        observed,
        innovation: Some(v),
        innovation_cov: Some(f),
        gain: Some(gain),
        step_loglik,
    })
}

/// Information form of the covariance update, `(B^{-1} + Z' H^{-1} Z)^{-1}`.
///
/// Algebraically equal to the covariance returned by [`update`]; `None` when
/// `B` or `H` is not invertible.
pub fn information_form_cov(
    pred_cov: &Matrix2<f64>,
    loading: &Loading,
    meas_cov: &DMatrix<f64>,
) -> Option<Matrix2<f64>> {
    let b_inv = pred_cov.try_inverse()?;
    let h_inv = meas_cov.clone().cholesky()?.inverse();
    let info = b_inv + loading.transpose() * h_inv * loading;
    info.try_inverse().map(|c| symmetrize(&c))
}

fn check_tenors(system: &DiscreteSystem, panel: &YieldPanel) -> Result<()> {
    let same = system.tenors.len() == panel.tenors.len()
        && system
            .tenors
            .iter()
            .zip(&panel.tenors)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
    if same {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "panel tenors {:?} do not match system tenors {:?}",
            panel.tenors, system.tenors
        )))
    }
}

pub fn run_filter(system: &DiscreteSystem, panel: &YieldPanel, init: FilterInit) -> Result<FilterOutput> {
    check_tenors(system, panel)?;
    let (mut mean, mut cov) = init.moments(system)?;
    let mut steps = Vec::with_capacity(panel.len());
    let mut total_loglik = 0.0;

    for (n, obs) in panel.values.iter().enumerate() {
        let (pm, pc) = predict(&mean, &cov, system);
        let up = update(&pm, &pc, obs, system).map_err(|e| match e {
            Error::SingularInnovation { condition, .. } => Error::SingularInnovation { step: n, condition },
            other => other,
        })?;
        total_loglik += up.step_loglik;
        mean = up.mean;
        cov = up.cov;
        steps.push(FilterStep {
            predicted_mean: pm,
            predicted_cov: pc,
            filtered_mean: up.mean,
            filtered_cov: up.cov,
            observed: up.observed,
            innovation: up.innovation,
            innovation_cov: up.innovation_cov,
            step_loglik: up.step_loglik,
        });
    }
    Ok(FilterOutput { steps, total_loglik })
}

/// Total log-likelihood without keeping the per-step record.
pub fn log_likelihood(system: &DiscreteSystem, panel: &YieldPanel, init: FilterInit) -> Result<f64> {
    check_tenors(system, panel)?;
    let (mut mean, mut cov) = init.moments(system)?;
    let mut total = 0.0;
    for (n, obs) in panel.values.iter().enumerate() {
        let (pm, pc) = predict(&mean, &cov, system);
        let up = update(&pm, &pc, obs, system).map_err(|e| match e {
            Error::SingularInnovation { condition, .. } => Error::SingularInnovation { step: n, condition },
            other => other,
        })?;
        total += up.step_loglik;
        mean = up.mean;
        cov = up.cov;
    }
    Ok(total)
}
