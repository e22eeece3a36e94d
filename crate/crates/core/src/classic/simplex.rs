//! Nelder-Mead simplex minimisation.

#[derive(Clone, Debug)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub converged: bool,
}

pub(crate) struct Options {
    /// Edge length of the axis-aligned starting simplex.
    pub step: f64,
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below `ftol * (1 + |f_best|)`.
    pub ftol: f64,
    /// ... and every vertex lies within `xtol` of the best one.
    pub xtol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            step: 0.5,
            max_evals: 5000,
            ftol: 1e-12,
            xtol: 1e-7,
        }
    }
}

pub(crate) fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &Options) -> Minimum {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();
    let mut evals = n + 1;

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let (best, worst) = (values[0], values[n]);
        let f_spread = worst - best;
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if best.is_finite() && f_spread <= opts.ftol * (1.0 + best.abs()) && x_spread <= opts.xtol
        {
            return Minimum {
                x: simplex.swap_remove(0),
                f: best,
                converged: true,
            };
        }
        if evals >= opts.max_evals {
            return Minimum {
                x: simplex.swap_remove(0),
                f: best,
                converged: false,
            };
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(1.0);
        let fr = eval(&reflected);
        evals += 1;
        if fr < values[0] {
            let expanded = along(2.0);
            let fe = eval(&expanded);
            evals += 1;
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let c = along(0.5);
            let fc = eval(&c);
            (c, fc)
        } else {
            let c = along(-0.5);
            let fc = eval(&c);
            (c, fc)
        };
        evals += 1;
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, v)| b + 0.5 * (v - b))
                .collect();
            values[i] = eval(&shrunk);
            simplex[i] = shrunk;
        }
        evals += n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = minimize(f, &[-1.2, 1.0], &Options::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn quadratic_bowl_4d() {
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * (v - 0.3).powi(2)).sum();
        let m = minimize(f, &[2.0, -1.0, 0.0, 5.0], &Options::default());
        assert!(m.converged);
        assert!(m.x.iter().all(|v| (v - 0.3).abs() < 1e-5));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = Options {
            max_evals: 10,
            ..Options::default()
        };
        assert!(!minimize(f, &[-1.2, 1.0], &opts).converged);
    }
}
