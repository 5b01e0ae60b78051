//! Minimal Nelder-Mead simplex minimizer used by the GEV fit.

pub(crate) struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) struct NelderMead {
    pub max_iterations: usize,
    /// Convergence when the spread of simplex values falls below
    /// `f_tol * (1 + |f_best|)` and every vertex is within `x_tol` of the best.
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            f_tol: 1e-13,
            x_tol: 1e-9,
        }
    }
}

impl NelderMead {
    /// Minimizes `f` from `start`, with initial simplex offsets `steps`.
    /// Non-finite objective values are treated as +inf.
    pub fn minimize<F>(&self, f: F, start: &[f64], steps: &[f64]) -> Minimum
    where
        F: Fn(&[f64]) -> f64,
    {
        let eval = |x: &[f64]| {
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let dim = start.len();
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        simplex.push((start.to_vec(), eval(start)));
        for i in 0..dim {
            let mut x = start.to_vec();
            x[i] += steps[i];
            let v = eval(&x);
            simplex.push((x, v));
        }

        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iterations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[dim].1;
            let spread_ok = (worst - best).abs() <= self.f_tol * (1.0 + best.abs());
            let size_ok = simplex[1..].iter().all(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .all(|(a, b)| (a - b).abs() <= self.x_tol * (1.0 + b.abs()))
            });
            if best.is_finite() && spread_ok && size_ok {
                converged = true;
                break;
            }
            iterations += 1;

            let mut centroid = vec![0.0; dim];
            for (x, _) in &simplex[..dim] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / dim as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[dim].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let reflected = along(alpha);
            let fr = eval(&reflected);
            if fr < simplex[0].1 {
                let expanded = along(gamma);
                let fe = eval(&expanded);
                simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
                continue;
            }
            if fr < simplex[dim - 1].1 {
                simplex[dim] = (reflected, fr);
                continue;
            }
            let (contracted, fc) = if fr < simplex[dim].1 {
                let c = along(rho);
                let v = eval(&c);
                (c, v)
            } else {
                let c = along(-rho);
                let v = eval(&c);
                (c, v)
            };
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (contracted, fc);
                continue;
            }
            let best_x = simplex[0].0.clone();
            for (x, v) in simplex.iter_mut().skip(1) {
                for (xi, bi) in x.iter_mut().zip(&best_x) {
                    *xi = bi + sigma * (*xi - bi);
                }
                *v = eval(x);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (point, value) = simplex.swap_remove(0);
        Minimum {
            point,
            value,
            iterations,
            converged,
        }
    }
}
