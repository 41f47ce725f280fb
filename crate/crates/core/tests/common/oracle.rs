//! Brute-force reference for the filter: stack every state and every
//! observed entry into one Gaussian vector and condition directly.

use nalgebra::{DMatrix, DVector};

pub struct JointResult {
    /// E[X_n | y_1..y_n] for each step.
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
    /// log density of all observed entries.
    pub loglik: f64,
}

pub struct LinearGaussian {
    pub transition: DMatrix<f64>,
    pub process_cov: DMatrix<f64>,
    pub loading: DMatrix<f64>,
    pub intercept: DVector<f64>,
    pub meas_cov: DMatrix<f64>,
    /// Law of the state one step before the first observation.
    pub init_mean: DVector<f64>,
    pub init_cov: DMatrix<f64>,
}

pub fn condition(model: &LinearGaussian, obs: &[Vec<Option<f64>>]) -> JointResult {
    let k = model.transition.nrows();
    let n = obs.len();

    // Marginal means and covariances of X_1..X_n.
    let mut mean_x = Vec::with_capacity(n);
    let mut cov_x = Vec::with_capacity(n);
    let mut m = model.init_mean.clone();
    let mut c = model.init_cov.clone();
    for _ in 0..n {
        m = &model.transition * m;
        c = &model.transition * c * model.transition.transpose() + &model.process_cov;
        mean_x.push(m.clone());
        cov_x.push(c.clone());
    }
    let mut power = vec![DMatrix::identity(k, k)];
    for i in 1..n.max(1) {
        power.push(&model.transition * &power[i - 1]);
    }
    // Full covariance of the stacked states: Cov(X_i, X_j) = Sigma_i (T^(j-i))'.
    let mut s = DMatrix::zeros(k * n, k * n);
    for i in 0..n {
        for j in i..n {
            let block = &cov_x[i] * power[j - i].transpose();
            s.view_mut((k * i, k * j), (k, k)).copy_from(&block);
            s.view_mut((k * j, k * i), (k, k)).copy_from(&block.transpose());
        }
    }

    // Observed entries as (step, tenor, value).
    let entries: Vec<(usize, usize, f64)> = obs
        .iter()
        .enumerate()
        .flat_map(|(t, row)| row.iter().enumerate().filter_map(move |(j, v)| v.map(|v| (t, j, v))))
        .collect();
    let p = entries.len();
    let mut a = DMatrix::zeros(p, k * n);
    let mut ey = DVector::zeros(p);
    let mut y = DVector::zeros(p);
    for (r, &(t, j, v)) in entries.iter().enumerate() {
        a.view_mut((r, k * t), (1, k)).copy_from(&model.loading.row(j));
        ey[r] = model.intercept[j] + (model.loading.row(j) * &mean_x[t])[0];
        y[r] = v;
    }
    let mut cov_y = &a * &s * a.transpose();
    for (r, &(t, j, _)) in entries.iter().enumerate() {
        for (q, &(u, l, _)) in entries.iter().enumerate() {
            if t == u {
                cov_y[(r, q)] += model.meas_cov[(j, l)];
            }
        }
    }
    let cov_xy = &s * a.transpose();

    let loglik = if p == 0 {
        0.0
    } else {
        let lu = cov_y.clone().lu();
        let resid = &y - &ey;
        let sol = lu.solve(&resid).expect("observation covariance is invertible");
        -0.5 * (p as f64 * (2.0 * std::f64::consts::PI).ln() + lu.determinant().ln() + resid.dot(&sol))
    };

    let mut means = Vec::with_capacity(n);
    let mut covs = Vec::with_capacity(n);
    for t in 0..n {
        let idx: Vec<usize> = (0..p).filter(|&r| entries[r].0 <= t).collect();
        let prior_m = mean_x[t].clone();
        let prior_c = cov_x[t].clone();
        if idx.is_empty() {
            means.push(prior_m);
            covs.push(prior_c);
            continue;
        }
        let sub_cov = cov_y.select_rows(&idx).select_columns(&idx);
        let cross = cov_xy.rows(k * t, k).select_columns(&idx);
        let resid = y.select_rows(&idx) - ey.select_rows(&idx);
        let lu = sub_cov.lu();
        let gain = lu.solve(&cross.transpose()).expect("invertible").transpose();
        means.push(prior_m + &gain * resid);
        covs.push(prior_c - &gain * cross.transpose());
    }
    JointResult { means, covs, loglik }
}
