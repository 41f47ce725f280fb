#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use zclb::data_io::{PanelSource, Units};
use zclb::kalman::FilterInit;
use zclb::state_space::{build_system, DiscreteSystem};
use zclb::{ModelParams, YieldPanel};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("data")
        .join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Panel on consecutive days starting 2001-01-01.
pub fn panel(tenors: &[f64], values: Vec<Vec<Option<f64>>>) -> YieldPanel {
    let start = NaiveDate::from_ymd_opt(2001, 1, 1).unwrap();
    let dates = (0..values.len()).map(|i| start + chrono::Days::new(i as u64)).collect();
    YieldPanel::new(
        dates,
        tenors.to_vec(),
        values,
        PanelSource {
            file: None,
            units: Units::Decimal,
        },
    )
    .unwrap()
}

/// Parameters on the scale of a yield desk: rates of a few percent,
/// factor volatilities of one to five percent.
pub fn desk_params(rng: &mut ChaCha8Rng) -> ModelParams {
    let zeta1_r = rng.random_range(0.05..2.0);
    let zeta1_lambda = rng.random_range(0.05..2.0);
    ModelParams {
        mu_r: rng.random_range(0.0..0.08),
        mu_lambda: rng.random_range(0.0..0.03),
        zeta1_r,
        zeta1_lambda,
        zeta2_r: rng.random_range(0.05..2.0),
        zeta2_lambda: rng.random_range(0.05..2.0),
        kappa11: rng.random_range(0.001..0.05),
        kappa12: rng.random_range(0.0..0.05),
        theta1: rng.random_range(-0.5..0.5),
        h_meas: rng.random_range(1e-8..1e-5),
    }
}

/// Parameters of order one, so covariances are not tiny in absolute terms.
pub fn unit_params(rng: &mut ChaCha8Rng) -> ModelParams {
    ModelParams {
        mu_r: rng.random_range(-0.05..0.1),
        mu_lambda: rng.random_range(0.0..0.05),
        zeta1_r: rng.random_range(0.2..2.0),
        zeta1_lambda: rng.random_range(0.2..2.0),
        zeta2_r: rng.random_range(0.2..2.0),
        zeta2_lambda: rng.random_range(0.2..2.0),
        kappa11: rng.random_range(0.2..1.5),
        kappa12: rng.random_range(0.0..1.0),
        theta1: rng.random_range(-1.0..1.0),
        h_meas: rng.random_range(0.01..0.5),
    }
}

/// Up to three distinct increasing tenors.
pub fn random_tenors(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let pool = [0.5, 1.0, 2.0, 5.0, 10.0, 20.0];
    let m = rng.random_range(1..=3);
    let mut picked: Vec<f64> = Vec::new();
    while picked.len() < m {
        let t = pool[rng.random_range(0..pool.len())];
        if !picked.contains(&t) {
            picked.push(t);
        }
    }
    picked.sort_by(f64::total_cmp);
    picked
}

pub struct Instance {
    pub system: DiscreteSystem,
    pub panel: YieldPanel,
}

/// Random small filtering problem with some entries missing.
pub fn random_instance(rng: &mut ChaCha8Rng, max_steps: usize) -> Instance {
    let params = unit_params(rng);
    let tenors = random_tenors(rng);
    let dt = rng.random_range(0.05..1.0);
    let system = build_system(&params, dt, &tenors).unwrap();
    let steps = rng.random_range(1..=max_steps);
    let values = (0..steps)
        .map(|_| {
            (0..tenors.len())
                .map(|j| {
                    if rng.random_bool(0.2) {
                        None
                    } else {
                        Some(system.intercept[j] + 0.7 * normal(rng))
                    }
                })
                .collect()
        })
        .collect();
    Instance {
        panel: panel(&tenors, values),
        system,
    }
}

pub fn oracle_model(system: &DiscreteSystem, init: FilterInit) -> oracle::LinearGaussian {
    let (m0, p0) = init.moments(system).unwrap();
    oracle::LinearGaussian {
        transition: to_dyn(&system.transition),
        process_cov: to_dyn(&system.process_cov),
        loading: DMatrix::from_fn(system.n_tenors(), 2, |i, j| system.loading[(i, j)]),
        intercept: system.intercept.clone(),
        meas_cov: system.meas_cov.clone(),
        init_mean: DVector::from_column_slice(m0.as_slice()),
        init_cov: to_dyn(&p0),
    }
}

pub fn to_dyn(m: &Matrix2<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(2, 2, m.as_slice())
}

/// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| normal(rng));
    let q = g.qr().q();
    let d = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(lo..hi)));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}
