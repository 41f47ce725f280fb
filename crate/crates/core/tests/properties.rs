mod common;

use proptest::prelude::*;

use zclb::affine::{
    asymptotic_yield, component_yield, h_func, survival_prob, w_tau, zclb_price, zclb_yield, Component,
};
use zclb::state_space::build_system;
use zclb::{FactorState, ModelParams, Tenor};

fn params_strategy() -> impl Strategy<Value = ModelParams> {
    (
        (
            -0.02f64..0.1,
            0.0f64..0.05,
            0.05f64..3.0,
            0.05f64..3.0,
            0.05f64..3.0,
            0.05f64..3.0,
        ),
        (0.0f64..0.05, 0.0f64..0.05, -1.0f64..1.0, 0.0f64..1e-4),
    )
        .prop_map(
            |((mu_r, mu_lambda, z1r, z1l, z2r, z2l), (k11, k12, theta1, h))| ModelParams {
                mu_r,
                mu_lambda,
                zeta1_r: z1r,
                zeta1_lambda: z1l,
                zeta2_r: z2r,
                zeta2_lambda: z2l,
                kappa11: k11,
                kappa12: k12,
                theta1,
                h_meas: h,
            },
        )
}

/// Composite Simpson rule on `n` (even) panels.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    h / 3.0 * (f(a) + inner + f(b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn h_is_a_decreasing_map_into_unit_interval(a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(h_func(lo) > 0.0 && h_func(lo) <= 1.0);
        prop_assert!(h_func(hi) <= h_func(lo));
    }

    #[test]
    fn h_matches_quadrature_of_exponential(g in 1e-6f64..30.0) {
        // H(g) = int_0^1 exp(-g s) ds.
        let q = simpson(|s| (-g * s).exp(), 0.0, 1.0, 2000);
        prop_assert!((h_func(g) - q).abs() < 1e-10);
    }

    #[test]
    fn yield_is_minus_log_price_over_tenor(p in params_strategy(), xr in -0.05f64..0.05, xl in -0.02f64..0.02, t in 0.01f64..60.0) {
        let s = FactorState::new(xr, xl);
        let tau = Tenor::new(t).unwrap();
        let y = zclb_yield(&p, &s, tau).unwrap();
        let b = zclb_price(&p, &s, tau);
        prop_assert!((-b.ln() / t - y).abs() < 1e-12);
    }

    #[test]
    fn aggregate_yield_is_sum_of_components(p in params_strategy(), xr in -0.05f64..0.05, xl in -0.02f64..0.02, t in 0.01f64..60.0) {
        let tau = Tenor::new(t).unwrap();
        let y = zclb_yield(&p, &FactorState::new(xr, xl), tau).unwrap();
        let sum = component_yield(&p, Component::Rate, xr, tau) + component_yield(&p, Component::Mortality, xl, tau);
        prop_assert!((y - sum).abs() < 1e-15);
    }

    #[test]
    fn deterministic_price_integrates_the_mean_path(
        mu_r in 0.0f64..0.1, mu_l in 0.0f64..0.05, zr in 0.05f64..3.0, zl in 0.05f64..3.0,
        xr in -0.05f64..0.05, xl in -0.02f64..0.02, t in 0.1f64..40.0,
    ) {
        // With no diffusion r(s) = mu_r - xr e^{-zr s}; the price is exp(-int (r + lambda)).
        let p = ModelParams::one_factor(mu_r, mu_l, zr, zl, 0.0, 0.0, 0.0).unwrap();
        let integral = simpson(|s| mu_r - xr * (-zr * s).exp() + mu_l - xl * (-zl * s).exp(), 0.0, t, 4000);
        let b = zclb_price(&p, &FactorState::new(xr, xl), Tenor::new(t).unwrap());
        prop_assert!((b - (-integral).exp()).abs() < 1e-10);
    }

    #[test]
    fn matched_cross_terms_give_the_gaussian_convexity(mu in 0.0f64..0.05, z in 0.05f64..3.0, k in 0.0f64..0.1, x in -0.05f64..0.05, t in 0.01f64..50.0) {
        // With kappa12 = kappa11, zeta2 = zeta1 and no risk premium the yield
        // is -ln E[exp(-int r)] / tau for r = mu - X, X an OU process from x.
        let p = ModelParams {
            mu_r: mu, mu_lambda: 0.0, zeta1_r: z, zeta1_lambda: 1.0, zeta2_r: z, zeta2_lambda: 1.0,
            kappa11: k, kappa12: k, theta1: 0.0, h_meas: 0.0,
        };
        let mean_int = x * (1.0 - (-z * t).exp()) / z;
        let var_int = k * k / (z * z)
            * (t - 2.0 * (1.0 - (-z * t).exp()) / z + (1.0 - (-2.0 * z * t).exp()) / (2.0 * z));
        let expected = mu - mean_int / t - 0.5 * var_int / t;
        let y = component_yield(&p, Component::Rate, x, Tenor::new(t).unwrap());
        prop_assert!((y - expected).abs() < 1e-12, "{} vs {}", y, expected);
    }

    #[test]
    fn long_maturity_approach_is_first_order(p in params_strategy()) {
        // w(tau) ~ c / tau with c = A / zeta1 + B / (zeta1 + zeta2).
        let t = 1e6;
        let w = w_tau(&p, Tenor::new(t).unwrap());
        for c in Component::ALL {
            let (z1, z2) = (p.zeta1(c), p.zeta2(c));
            let cross = p.kappa11 * p.kappa12 / (z1 * z2);
            let limit = (p.theta1 * p.kappa11 / z1 - cross) / z1 + 0.5 * cross / (z1 + z2);
            prop_assert!((t * w.get(c) - limit).abs() <= 1e-12 + 1e-5 * limit.abs());
        }
        let y = zclb_yield(&p, &FactorState::ZERO, Tenor::new(t).unwrap()).unwrap();
        let y2 = zclb_yield(&p, &FactorState::ZERO, Tenor::new(2.0 * t).unwrap()).unwrap();
        let r_inf = asymptotic_yield(&p).sum();
        // Doubling the maturity halves the gap.
        prop_assert!(((y2 - r_inf) - 0.5 * (y - r_inf)).abs() <= 1e-9 * (y - r_inf).abs() + 1e-15);
    }

    #[test]
    fn system_matrices_respect_their_ranges(p in params_strategy(), dt in 1e-3f64..2.0) {
        let sys = build_system(&p, dt, &[0.25, 1.0, 5.0, 30.0]).unwrap();
        for i in 0..2 {
            prop_assert!(sys.transition[(i, i)] > 0.0 && sys.transition[(i, i)] < 1.0);
            prop_assert!(sys.process_cov[(i, i)] >= 0.0);
        }
        prop_assert_eq!(sys.transition[(0, 1)], 0.0);
        for v in sys.loading.iter() {
            prop_assert!(*v > -1.0 && *v < 0.0);
        }
    }

    #[test]
    fn discretization_is_a_semigroup(p in params_strategy(), dt in 1e-3f64..2.0) {
        let full = build_system(&p, dt, &[1.0]).unwrap();
        let half = build_system(&p, dt / 2.0, &[1.0]).unwrap();
        let t2 = half.transition * half.transition;
        let v2 = half.transition * half.process_cov * half.transition.transpose() + half.process_cov;
        for i in 0..2 {
            prop_assert!((t2[(i, i)] - full.transition[(i, i)]).abs() < 1e-15);
            prop_assert!((v2[(i, i)] - full.process_cov[(i, i)]).abs() <= 1e-14 * full.process_cov[(i, i)].max(1e-300));
        }
    }

    #[test]
    fn measurement_reproduces_closed_form_yields(p in params_strategy(), xr in -0.05f64..0.05, xl in -0.02f64..0.02) {
        let tenors = [0.5, 2.0, 10.0];
        let sys = build_system(&p, 1.0 / 52.0, &tenors).unwrap();
        let s = FactorState::new(xr, xl);
        let y = sys.measure(&s);
        for (i, t) in tenors.iter().enumerate() {
            let direct = zclb_yield(&p, &s, Tenor::new(*t).unwrap()).unwrap();
            prop_assert!((y[i] - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn survival_flags_values_above_one(p in params_strategy(), xl in -0.2f64..0.2, t in 0.1f64..30.0) {
        let sp = survival_prob(&p, &FactorState::new(0.0, xl), Tenor::new(t).unwrap());
        prop_assert!(sp.probability > 0.0);
        prop_assert_eq!(sp.exceeds_one, sp.probability > 1.0);
    }
}

#[test]
fn price_is_one_at_zero_tenor() {
    let mut r = common::rng(3);
    for _ in 0..100 {
        let p = common::desk_params(&mut r);
        assert_eq!(
            zclb_price(&p, &FactorState::new(0.01, -0.02), Tenor::new(0.0).unwrap()),
            1.0
        );
    }
}

#[test]
fn h_is_continuous_across_the_series_switch() {
    let t = zclb::affine::H_SERIES_THRESHOLD;
    let below = h_func(t * (1.0 - 1e-12));
    let above = h_func(t * (1.0 + 1e-12));
    assert!((below - above).abs() < 1e-15);
}
