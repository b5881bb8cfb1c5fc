//! Derivative-free minimisation (Nelder-Mead simplex).

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when the spread of objective values across the simplex falls below
    /// `f_tol * (|f_best| + f_tol)`.
    pub f_tol: f64,
    /// ...and the simplex diameter, measured per coordinate as
    /// `|a - b| / (1 + |b|)`, falls below `x_tol`.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            f_tol: 1e-12,
            x_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimises `f` from `x0` with per-coordinate initial steps `steps`.
///
/// Non-finite objective values are treated as +inf, which lets callers
/// express hard constraints as barriers.
pub fn nelder_mead<F>(f: F, x0: &[f64], steps: &[f64], opts: NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        return Minimum {
            x: vec![],
            fx: eval(x0),
            iterations: 0,
            converged: true,
        };
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if steps[i] != 0.0 { steps[i] } else { 0.05 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        // order vertices, stable on ties so results are reproducible
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[n];
        if best.is_finite() && worst.is_finite() {
            let spread = worst - best;
            let diameter = simplex[1..]
                .iter()
                .map(|v| {
                    v.iter()
                        .zip(&simplex[0])
                        .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if spread <= opts.f_tol * (best.abs() + opts.f_tol) && diameter <= opts.x_tol {
                converged = true;
                break;
            }
            if spread == 0.0 && diameter <= opts.x_tol.sqrt() {
                converged = true;
                break;
            }
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let towards = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + coef * (w - c))
                .collect()
        };

        let reflected = towards(-alpha);
        let fr = eval(&reflected);
        if fr < values[0] {
            let expanded = towards(-gamma);
            let fe = eval(&expanded);
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
            let c = towards(-rho);
            let fc = eval(&c);
            (c, fc)
        } else {
            let c = towards(rho);
            let fc = eval(&c);
            (c, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        // shrink towards the best vertex
        let best_v = simplex[0].clone();
        for i in 1..=n {
            for j in 0..n {
                simplex[i][j] = best_v[j] + sigma * (simplex[i][j] - best_v[j]);
            }
            values[i] = eval(&simplex[i]);
        }
    }

    let (best_idx, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .expect("non-empty simplex");
    Minimum {
        x: simplex[best_idx].clone(),
        fx: values[best_idx],
        iterations,
        converged,
    }
}

/// Runs [`nelder_mead`] and restarts once from the optimum, which recovers
/// from premature simplex collapse.
pub fn nelder_mead_restarted<F>(f: F, x0: &[f64], steps: &[f64], opts: NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let first = nelder_mead(&f, x0, steps, opts);
    let small: Vec<f64> = steps.iter().map(|s| s * 0.1).collect();
    let second = nelder_mead(&f, &first.x, &small, opts);
    let iterations = first.iterations + second.iterations;
    if second.fx <= first.fx {
        Minimum {
            iterations,
            ..second
        }
    } else {
        Minimum {
            iterations,
            converged: first.converged && second.converged,
            ..first
        }
    }
}
