//! Closed-form term structure of the two-component Vasicek longevity model.
//!
//! The joint short rate / mortality intensity is `z = mu - X` where each
//! component of `X` is an Ornstein-Uhlenbeck factor
//! `dX = -zeta1 X dt + kappa11 dW`. With constant parameters the zero-coupon
//! longevity bond yield of one component is
//!
//! ```text
//! R(tau) = R_inf - w(tau) - H(zeta1 tau) x
//! R_inf  = mu + theta1 kappa11 / zeta1 - (kappa11 / zeta1)^2 / 2
//! w(tau) = H(zeta1 tau) [theta1 kappa11 / zeta1 - kappa11 kappa12 / (zeta1 zeta2)]
//!          + H((zeta1 + zeta2) tau) kappa11 kappa12 / (2 zeta1 zeta2)
//! H(g)   = (1 - exp(-g)) / g
//! ```
//!
//! and the bond discounts by the sum of both components (`r + lambda`).
//!
//! With `kappa12 = kappa11` and `zeta2 = zeta1` the cross terms reproduce the
//! exact Gaussian convexity of the integrated factor; with `kappa12 = 0` the
//! adjustment reduces to the market-price-of-risk term alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this magnitude `h_func` switches to its Taylor series.
pub const H_SERIES_THRESHOLD: f64 = 1e-4;

/// `H(g) = (1 - e^{-g}) / g`, with the removable singularity at zero filled in.
pub fn h_func(gamma: f64) -> f64 {
    if gamma.abs() < H_SERIES_THRESHOLD {
        1.0 - gamma / 2.0 + gamma * gamma / 6.0 - gamma * gamma * gamma / 24.0
    } else {
        -(-gamma).exp_m1() / gamma
    }
}

/// Which half of the joint process a quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Rate,
    Mortality,
}

impl Component {
    pub const ALL: [Component; 2] = [Component::Rate, Component::Mortality];
}

/// A value carried separately for the rate and mortality components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerComponent {
    pub rate: f64,
    pub mortality: f64,
}

impl PerComponent {
    pub fn get(&self, c: Component) -> f64 {
        match c {
            Component::Rate => self.rate,
            Component::Mortality => self.mortality,
        }
    }

    pub fn sum(&self) -> f64 {
        self.rate + self.mortality
    }
}

/// Static parameters of the model.
///
/// `zeta2_*` and `kappa12` only enter the cross terms of the yield
/// adjustment `w(tau)`; they have no dynamics of their own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    pub mu_r: f64,
    pub mu_lambda: f64,
    pub zeta1_r: f64,
    pub zeta1_lambda: f64,
    pub zeta2_r: f64,
    pub zeta2_lambda: f64,
    pub kappa11: f64,
    pub kappa12: f64,
    pub theta1: f64,
    pub h_meas: f64,
}

/// Params file layout: `zeta2_*` default to the matching `zeta1_*`, the
/// remaining optional fields to zero.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    mu_r: f64,
    mu_lambda: f64,
    zeta1_r: f64,
    zeta1_lambda: f64,
    zeta2_r: Option<f64>,
    zeta2_lambda: Option<f64>,
    kappa11: f64,
    #[serde(default)]
    kappa12: f64,
    #[serde(default)]
    theta1: f64,
    #[serde(default)]
    h_meas: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        let p = ModelParams {
            mu_r: raw.mu_r,
            mu_lambda: raw.mu_lambda,
            zeta1_r: raw.zeta1_r,
            zeta1_lambda: raw.zeta1_lambda,
            zeta2_r: raw.zeta2_r.unwrap_or(raw.zeta1_r),
            zeta2_lambda: raw.zeta2_lambda.unwrap_or(raw.zeta1_lambda),
            kappa11: raw.kappa11,
            kappa12: raw.kappa12,
            theta1: raw.theta1,
            h_meas: raw.h_meas,
        };
        p.validate()?;
        Ok(p)
    }
}

impl ModelParams {
    /// Pure one-factor configuration: `zeta2 = zeta1`, `kappa12 = 0`.
    pub fn one_factor(
        mu_r: f64,
        mu_lambda: f64,
        zeta_r: f64,
        zeta_lambda: f64,
        kappa11: f64,
        theta1: f64,
        h_meas: f64,
    ) -> Result<Self> {
        let p = ModelParams {
            mu_r,
            mu_lambda,
            zeta1_r: zeta_r,
            zeta1_lambda: zeta_lambda,
            zeta2_r: zeta_r,
            zeta2_lambda: zeta_lambda,
            kappa11,
            kappa12: 0.0,
            theta1,
            h_meas,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mu_r", self.mu_r),
            ("mu_lambda", self.mu_lambda),
            ("zeta1_r", self.zeta1_r),
            ("zeta1_lambda", self.zeta1_lambda),
            ("zeta2_r", self.zeta2_r),
            ("zeta2_lambda", self.zeta2_lambda),
            ("kappa11", self.kappa11),
            ("kappa12", self.kappa12),
            ("theta1", self.theta1),
            ("h_meas", self.h_meas),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in &fields[2..6] {
            if *v <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [fields[6], fields[7], fields[9]] {
            if v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn mu(&self, c: Component) -> f64 {
        match c {
            Component::Rate => self.mu_r,
            Component::Mortality => self.mu_lambda,
        }
    }

    pub fn zeta1(&self, c: Component) -> f64 {
        match c {
            Component::Rate => self.zeta1_r,
            Component::Mortality => self.zeta1_lambda,
        }
    }

    pub fn zeta2(&self, c: Component) -> f64 {
        match c {
            Component::Rate => self.zeta2_r,
            Component::Mortality => self.zeta2_lambda,
        }
    }
}

/// Latent factor `X` at one time point (deviation of `(r, lambda)` from `mu`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FactorState {
    pub x_r: f64,
    pub x_lambda: f64,
}

impl FactorState {
    pub const ZERO: FactorState = FactorState {
        x_r: 0.0,
        x_lambda: 0.0,
    };

    pub fn new(x_r: f64, x_lambda: f64) -> Self {
        FactorState { x_r, x_lambda }
    }

    pub fn get(&self, c: Component) -> f64 {
        match c {
            Component::Rate => self.x_r,
            Component::Mortality => self.x_lambda,
        }
    }
}

/// Time to maturity in years.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Tenor(f64);

impl Tenor {
    pub fn new(tau: f64) -> Result<Self> {
        if tau.is_finite() && tau >= 0.0 {
            Ok(Tenor(tau))
        } else {
            Err(Error::InvalidInput(format!("tenor must be finite and >= 0, got {tau}")))
        }
    }

    pub fn years(self) -> f64 {
        self.0
    }
}

/// Infinite-maturity yield `R_inf` of each component.
pub fn asymptotic_yield(params: &ModelParams) -> PerComponent {
    let one = |c| {
        let ratio = params.kappa11 / params.zeta1(c);
        params.mu(c) + params.theta1 * ratio - 0.5 * ratio * ratio
    };
    PerComponent {
        rate: one(Component::Rate),
        mortality: one(Component::Mortality),
    }
}

fn w_component(params: &ModelParams, c: Component, tau: f64) -> f64 {
    let z1 = params.zeta1(c);
    let z2 = params.zeta2(c);
    let cross = params.kappa11 * params.kappa12 / (z1 * z2);
    h_func(z1 * tau) * (params.theta1 * params.kappa11 / z1 - cross) + 0.5 * h_func((z1 + z2) * tau) * cross
}

/// Maturity-dependent yield adjustment `w(tau)` of each component.
pub fn w_tau(params: &ModelParams, tau: Tenor) -> PerComponent {
    PerComponent {
        rate: w_component(params, Component::Rate, tau.0),
        mortality: w_component(params, Component::Mortality, tau.0),
    }
}

/// Yield of a single component at factor value `x`. Defined for `tau = 0`
/// as the limit (`R_inf - w(0) - x`).
pub fn component_yield(params: &ModelParams, c: Component, x: f64, tau: Tenor) -> f64 {
    let ratio = params.kappa11 / params.zeta1(c);
    let r_inf = params.mu(c) + params.theta1 * ratio - 0.5 * ratio * ratio;
    r_inf - w_component(params, c, tau.0) - h_func(params.zeta1(c) * tau.0) * x
}

/// Discount factor of a single component; the bond price is the product
/// over both components.
pub fn component_price(params: &ModelParams, c: Component, x: f64, tau: Tenor) -> f64 {
    if tau.0 == 0.0 {
        return 1.0;
    }
    (-tau.0 * component_yield(params, c, x, tau)).exp()
}

fn aggregate_yield(params: &ModelParams, state: &FactorState, tau: Tenor) -> f64 {
    Component::ALL
        .iter()
        .map(|&c| component_yield(params, c, state.get(c), tau))
        .sum()
}

/// Continuously compounded zero-coupon longevity bond yield (`r + lambda`).
pub fn zclb_yield(params: &ModelParams, state: &FactorState, tau: Tenor) -> Result<f64> {
    if tau.0 == 0.0 {
        return Err(Error::InvalidInput(
            "yield is undefined at zero tenor; use the price".into(),
        ));
    }
    Ok(aggregate_yield(params, state, tau))
}

/// Zero-coupon longevity bond price `exp(-tau * yield)`; exactly 1 at `tau = 0`.
pub fn zclb_price(params: &ModelParams, state: &FactorState, tau: Tenor) -> f64 {
    if tau.0 == 0.0 {
        return 1.0;
    }
    (-tau.0 * aggregate_yield(params, state, tau)).exp()
}

/// Survival index implied by the mortality component alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalProb {
    pub probability: f64,
    /// Set when the value exceeds 1, i.e. the implied intensity went negative.
    pub exceeds_one: bool,
}

pub fn survival_prob(params: &ModelParams, state: &FactorState, tau: Tenor) -> SurvivalProb {
    let probability = component_price(params, Component::Mortality, state.x_lambda, tau);
    SurvivalProb {
        probability,
        exceeds_one: probability > 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params() -> ModelParams {
        ModelParams {
            mu_r: 0.04,
            mu_lambda: 0.012,
            zeta1_r: 0.3,
            zeta1_lambda: 0.8,
            zeta2_r: 0.5,
            zeta2_lambda: 1.1,
            kappa11: 0.015,
            kappa12: 0.01,
            theta1: 0.2,
            h_meas: 1e-6,
        }
    }

    fn tenor(t: f64) -> Tenor {
        Tenor::new(t).unwrap()
    }

    #[test]
    fn h_func_known_values() {
        assert_eq!(h_func(0.0), 1.0);
        assert_abs_diff_eq!(h_func(1.0), 0.632_120_558_828_557_7, epsilon = 1e-15);
        assert!(h_func(1e3) < 1.001e-3);
        assert!(h_func(1e300) < 1e-299);
    }

    #[test]
    fn h_func_series_matches_closed_form_at_switch() {
        for g in [H_SERIES_THRESHOLD, -H_SERIES_THRESHOLD] {
            let closed = (1.0 - (-g).exp()) / g;
            let below = h_func(g * (1.0 - 1e-12));
            assert_abs_diff_eq!(below, closed, epsilon = 1e-12);
            assert_abs_diff_eq!(h_func(g), closed, epsilon = 1e-12);
        }
    }

    #[test]
    fn asymptotic_yield_examples() {
        let mut p = params();
        p.theta1 = 0.0;
        p.kappa11 = 0.0;
        p.mu_r = 0.05;
        assert_eq!(asymptotic_yield(&p).rate, 0.05);

        // kappa11 / zeta1 = 2 theta1 cancels exactly.
        let mut p = params();
        p.theta1 = 0.25;
        p.kappa11 = 0.5;
        p.zeta1_r = 1.0;
        assert_abs_diff_eq!(asymptotic_yield(&p).rate, p.mu_r, epsilon = 1e-16);

        let mut p = params();
        p.mu_r = 0.1;
        p.theta1 = 0.5;
        p.kappa11 = 0.03;
        p.zeta1_r = 1.0;
        assert_abs_diff_eq!(asymptotic_yield(&p).rate, 0.11455, epsilon = 1e-12);
    }

    #[test]
    fn w_tau_examples() {
        let mut p = params();
        p.kappa12 = 0.0;
        p.theta1 = 0.0;
        for t in [0.0, 0.5, 3.0, 40.0] {
            let w = w_tau(&p, tenor(t));
            assert_eq!(w.rate, 0.0);
            assert_eq!(w.mortality, 0.0);
        }

        let mut p = params();
        p.theta1 = 0.5;
        p.kappa11 = 0.03;
        p.kappa12 = 0.0;
        p.zeta1_r = 1.0;
        assert_abs_diff_eq!(w_tau(&p, tenor(1.0)).rate, 0.009_481_808_382_428_4, epsilon = 1e-15);
        assert!(w_tau(&params(), tenor(1e12)).rate.abs() < 1e-12);
    }

    #[test]
    fn yield_composes_components() {
        let mut p = params();
        p.theta1 = 0.5;
        p.kappa11 = 0.03;
        p.kappa12 = 0.0;
        p.zeta1_r = 1.0;
        let x = 0.01;
        let expected = asymptotic_yield(&p).rate - w_tau(&p, tenor(1.0)).rate - h_func(1.0) * x;
        assert_abs_diff_eq!(
            component_yield(&p, Component::Rate, x, tenor(1.0)),
            expected,
            epsilon = 1e-16
        );
    }

    #[test]
    fn zero_risk_yield_is_long_run_mean() {
        let mut p = params();
        p.theta1 = 0.0;
        p.kappa11 = 0.0;
        p.kappa12 = 0.0;
        let y = zclb_yield(&p, &FactorState::ZERO, tenor(7.0)).unwrap();
        assert_abs_diff_eq!(y, p.mu_r + p.mu_lambda, epsilon = 1e-16);
    }

    #[test]
    fn yield_rejects_zero_tenor() {
        assert!(zclb_yield(&params(), &FactorState::ZERO, tenor(0.0)).is_err());
        assert!(Tenor::new(-1.0).is_err());
        assert!(Tenor::new(f64::NAN).is_err());
    }

    #[test]
    fn price_examples() {
        let state = FactorState::new(0.3, -0.2);
        assert_eq!(zclb_price(&params(), &state, tenor(0.0)), 1.0);

        let p = ModelParams::one_factor(0.04, 0.01, 1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(
            zclb_price(&p, &FactorState::ZERO, tenor(2.0)),
            (-0.1f64).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn deterministic_survival() {
        let p = ModelParams::one_factor(0.03, 0.01, 0.4, 0.7, 0.0, 0.0, 0.0).unwrap();
        let s = survival_prob(&p, &FactorState::ZERO, tenor(10.0));
        assert_abs_diff_eq!(s.probability, (-0.1f64).exp(), epsilon = 1e-15);
        assert!(!s.exceeds_one);
        assert_eq!(
            survival_prob(&p, &FactorState::new(0.0, 5.0), tenor(0.0)).probability,
            1.0
        );
    }

    #[test]
    fn negative_intensity_is_flagged_not_clamped() {
        let p = ModelParams::one_factor(0.03, 0.01, 0.4, 0.7, 0.0, 0.0, 0.0).unwrap();
        let s = survival_prob(&p, &FactorState::new(0.0, 0.5), tenor(5.0));
        assert!(s.exceeds_one);
        assert!(s.probability > 1.0);
    }

    #[test]
    fn params_validation() {
        let mut p = params();
        p.zeta1_lambda = 0.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.kappa12 = -1e-3;
        assert!(p.validate().is_err());
        let mut p = params();
        p.h_meas = f64::INFINITY;
        assert!(p.validate().is_err());
        let mut p = params();
        p.mu_r = -0.01;
        p.theta1 = -2.0;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn params_json_defaults() {
        let p: ModelParams =
            serde_json::from_str(r#"{"mu_r":0.05,"mu_lambda":0.01,"zeta1_r":1,"zeta1_lambda":2,"kappa11":0.02}"#)
                .unwrap();
        assert_eq!(p.zeta2_r, 1.0);
        assert_eq!(p.zeta2_lambda, 2.0);
        assert_eq!(p.kappa12, 0.0);
        assert_eq!(p.theta1, 0.0);
        assert_eq!(p.h_meas, 0.0);

        let back: ModelParams = serde_json::from_str(&serde_json::to_string(&params()).unwrap()).unwrap();
        assert_eq!(back, params());

        let bad = r#"{"mu_r":0.05,"mu_lambda":0.01,"zeta1_r":-1,"zeta1_lambda":2,"kappa11":0.02}"#;
        assert!(serde_json::from_str::<ModelParams>(bad).is_err());
        let unknown = r#"{"mu_r":0.05,"mu_lambda":0.01,"zeta1_r":1,"zeta1_lambda":2,"kappa11":0.02,"mu":1}"#;
        assert!(serde_json::from_str::<ModelParams>(unknown).is_err());
    }
}
