//! Derivative-free minimization (Nelder-Mead simplex).

/// Reflection, expansion, contraction and shrink coefficients.
const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const RHO: f64 = 0.5;
const SIGMA: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Converged once the spread of objective values over the simplex is
    /// at most this (absolute).
    pub f_tol: f64,
    /// Per-coordinate offset of the initial simplex vertices.
    pub step: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Simplex {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Simplex {
    fn around<F: FnMut(&[f64]) -> f64>(x0: &[f64], value0: f64, step: &[f64], f: &mut F) -> Self {
        let mut points = vec![x0.to_vec()];
        let mut values = vec![value0];
        for i in 0..x0.len() {
            let mut p = x0.to_vec();
            p[i] += step[i];
            values.push(f(&p));
            points.push(p);
        }
        Simplex { points, values }
    }

    /// Best vertex first; ties keep their previous order.
    fn sort(&mut self) {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.points = idx.iter().map(|&i| self.points[i].clone()).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }

    fn spread(&self) -> f64 {
        let best = self.values[0];
        let worst = *self.values.last().unwrap();
        if worst.is_finite() {
            worst - best
        } else {
            f64::INFINITY
        }
    }
}

fn clean(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn lerp(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

/// Minimizes `f` from `x0`. Non-finite objective values rank worst.
///
/// After the simplex first meets the tolerance it is rebuilt around the
/// best point; the run counts as converged once a rebuilt simplex
/// collapses without improving the best value by more than `f_tol`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let n = x0.len();
    assert_eq!(opts.step.len(), n, "one simplex step per coordinate");
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        clean(f(x))
    };

    let v0 = eval(x0);
    let mut simplex = Simplex::around(x0, v0, &opts.step, &mut eval);
    let mut iterations = 0;
    let mut converged = false;
    let mut last_restart_value = f64::INFINITY;

    while iterations < opts.max_iter {
        simplex.sort();
        if simplex.spread() <= opts.f_tol {
            let best = simplex.values[0];
            if last_restart_value - best <= opts.f_tol {
                converged = true;
                break;
            }
            last_restart_value = best;
            let x = simplex.points[0].clone();
            simplex = Simplex::around(&x, best, &opts.step, &mut eval);
            continue;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex.points[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex.points[n].clone();
        let f_best = simplex.values[0];
        let f_second = simplex.values[n - 1];
        let f_worst = simplex.values[n];

        let reflected = lerp(&centroid, &worst, -ALPHA);
        let f_r = eval(&reflected);
        if f_r < f_best {
            let expanded = lerp(&centroid, &worst, -GAMMA);
            let f_e = eval(&expanded);
            if f_e < f_r {
                simplex.points[n] = expanded;
                simplex.values[n] = f_e;
            } else {
                simplex.points[n] = reflected;
                simplex.values[n] = f_r;
            }
            continue;
        }
        if f_r < f_second {
            simplex.points[n] = reflected;
            simplex.values[n] = f_r;
            continue;
        }
        let (contracted, f_c) = if f_r < f_worst {
            let c = lerp(&centroid, &reflected, RHO);
            let fc = eval(&c);
            (c, fc)
        } else {
            let c = lerp(&centroid, &worst, RHO);
            let fc = eval(&c);
            (c, fc)
        };
        if f_c < f_worst.min(f_r) {
            simplex.points[n] = contracted;
            simplex.values[n] = f_c;
            continue;
        }
        let best = simplex.points[0].clone();
        for i in 1..=n {
            let p = lerp(&best, &simplex.points[i], SIGMA);
            simplex.values[i] = eval(&p);
            simplex.points[i] = p;
        }
    }
    simplex.sort();
    Minimum {
        x: simplex.points[0].clone(),
        value: simplex.values[0],
        iterations,
        evaluations,
        converged,
    }
}
