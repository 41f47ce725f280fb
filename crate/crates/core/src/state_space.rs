//! Exact discrete-time state-space form of the model.
//!
//! State equation: `X_n = T X_{n-1} + eta_n`, `eta_n ~ N(0, V)` with
//! `T = diag(exp(-zeta1 dt))` and `V = diag(kappa11^2 (1 - exp(-2 zeta1 dt)) / (2 zeta1))`,
//! the exact conditional law of the OU factor over one interval.
//!
//! Measurement equation: `y_n = d + Z X_n + eps_n`, `eps_n ~ N(0, h_meas I)`,
//! where row `i` of `Z` is `(-H(zeta1_r tau_i), -H(zeta1_lambda tau_i))` and
//! `d_i` is the summed `R_inf - w(tau_i)`.
//!
//! The literature writes both `T` and `Z` with the same symbol; here they are
//! kept apart as `transition` and `loading`.

use nalgebra::{DMatrix, DVector, Dyn, Matrix2, OMatrix, Vector2, U2};

use crate::affine::{self, h_func, Component, FactorState, ModelParams, Tenor};
use crate::error::{Error, Result};

/// `M x 2` measurement loading matrix.
pub type Loading = OMatrix<f64, Dyn, U2>;

#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub params: ModelParams,
    pub dt: f64,
    pub transition: Matrix2<f64>,
    pub process_cov: Matrix2<f64>,
    pub loading: Loading,
    pub intercept: DVector<f64>,
    pub meas_cov: DMatrix<f64>,
    pub tenors: Vec<f64>,
}

/// `(1 - exp(-2 zeta dt)) / (2 zeta)`, written as `dt H(2 zeta dt)` so the
/// `zeta -> 0` random-walk limit is exact.
fn ou_variance_factor(zeta: f64, dt: f64) -> f64 {
    dt * h_func(2.0 * zeta * dt)
}

pub fn build_system(params: &ModelParams, dt: f64, tenors: &[f64]) -> Result<DiscreteSystem> {
    params.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be > 0, got {dt}")));
    }
    if tenors.is_empty() {
        return Err(Error::InvalidInput("at least one tenor is required".into()));
    }
    for (i, &t) in tenors.iter().enumerate() {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidInput(format!("tenor {i} must be > 0, got {t}")));
        }
        if i > 0 && t <= tenors[i - 1] {
            return Err(Error::InvalidInput(format!(
                "tenors must be strictly increasing (duplicate or unsorted at {t})"
            )));
        }
    }

    let zr = params.zeta1_r;
    let zl = params.zeta1_lambda;
    let k2 = params.kappa11 * params.kappa11;
    let transition = Matrix2::new((-zr * dt).exp(), 0.0, 0.0, (-zl * dt).exp());
    let process_cov = Matrix2::new(
        k2 * ou_variance_factor(zr, dt),
        0.0,
        0.0,
        k2 * ou_variance_factor(zl, dt),
    );

    let m = tenors.len();
    let r_inf = affine::asymptotic_yield(params);
    let mut loading = Loading::zeros(m);
    let mut intercept = DVector::zeros(m);
    for (i, &t) in tenors.iter().enumerate() {
        let w = affine::w_tau(params, Tenor::new(t)?);
        loading[(i, 0)] = -h_func(zr * t);
        loading[(i, 1)] = -h_func(zl * t);
        intercept[i] = Component::ALL.iter().map(|&c| r_inf.get(c) - w.get(c)).sum();
    }
    let meas_cov = DMatrix::from_diagonal_element(m, m, params.h_meas);

    Ok(DiscreteSystem {
        params: *params,
        dt,
        transition,
        process_cov,
        loading,
        intercept,
        meas_cov,
        tenors: tenors.to_vec(),
    })
}

impl DiscreteSystem {
    pub fn n_tenors(&self) -> usize {
        self.tenors.len()
    }

    /// Noiseless yields `d + Z x` at every tenor.
    pub fn measure(&self, state: &FactorState) -> DVector<f64> {
        &self.intercept + &self.loading * Vector2::new(state.x_r, state.x_lambda)
    }
}

/// Stationary law of the factor: mean zero, `diag(kappa11^2 / (2 zeta1))`.
pub fn stationary_moments(params: &ModelParams) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    if !(params.zeta1_r > 0.0 && params.zeta1_lambda > 0.0) {
        return Err(Error::InvalidParams(
            "stationary moments need zeta1_r > 0 and zeta1_lambda > 0".into(),
        ));
    }
    let k2 = params.kappa11 * params.kappa11;
    Ok((
        Vector2::zeros(),
        Matrix2::new(k2 / (2.0 * params.zeta1_r), 0.0, 0.0, k2 / (2.0 * params.zeta1_lambda)),
    ))
}
