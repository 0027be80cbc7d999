//! Derivative-free local search.

/// Result of a Nelder–Mead run.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Minimizes `f` from `start` with an axis-aligned initial simplex of size `step`.
///
/// Non-finite objective values are treated as `+∞`, which the simplex
/// simply moves away from.
pub fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    max_evals: usize,
    ftol: f64,
) -> Minimum {
    let n = start.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        let v = eval(start, &mut evals);
        return Minimum {
            x: vec![],
            value: v,
            evaluations: evals,
        };
    }
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        let best = values[0];
        let worst = values[n];
        if worst.is_finite() && (worst - best).abs() <= ftol * (1.0 + best.abs()) {
            break;
        }
        centroid.iter_mut().for_each(|c| *c = 0.0);
        for p in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let along = |coef: f64, out: &mut Vec<f64>, worst_pt: &[f64]| {
            for k in 0..n {
                out[k] = centroid[k] + coef * (centroid[k] - worst_pt[k]);
            }
        };
        along(alpha, &mut trial, &simplex[n]);
        let fr = eval(&trial, &mut evals);
        if fr < values[0] {
            let mut exp = vec![0.0; n];
            along(gamma, &mut exp, &simplex[n]);
            let fe = eval(&exp, &mut evals);
            if fe < fr {
                simplex[n] = exp;
                values[n] = fe;
            } else {
                simplex[n] = trial.clone();
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = trial.clone();
            values[n] = fr;
        } else {
            let mut con = vec![0.0; n];
            if fr < values[n] {
                along(rho, &mut con, &simplex[n]);
            } else {
                along(-rho, &mut con, &simplex[n]);
            }
            let fc = eval(&con, &mut evals);
            if fc < values[n].min(fr) {
                simplex[n] = con;
                values[n] = fc;
            } else {
                let b = simplex[0].clone();
                for i in 1..=n {
                    for k in 0..n {
                        simplex[i][k] = b[k] + sigma * (simplex[i][k] - b[k]);
                    }
                    values[i] = eval(&simplex[i], &mut evals);
                }
            }
        }
    }
    let (i, v) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))
        .expect("simplex is nonempty");
    Minimum {
        x: simplex[i].clone(),
        value: v,
        evaluations: evals,
    }
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section(
    f: &mut dyn FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    iters: usize,
) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
