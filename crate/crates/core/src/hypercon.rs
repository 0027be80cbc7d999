//! Forward and reverse hypercontractivity: counterexample search, critical
//! times, and closed-form thresholds.
//!
//! A verdict of "no counterexample found" is a statement about the search,
//! not a proof.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::measure::{holder_conjugate, weighted, RealFunction};
use crate::numeric::{ksum, linspace};
use crate::optimize::{golden_section, nelder_mead};
use crate::rng::substream;
use crate::semigroup::Semigroup;

/// Deficits below this count as violations.
pub const VIOLATION_TOL: f64 = 1e-9;
/// Box for the log-parametrized search.
pub const SEARCH_BOX: f64 = 8.0;
/// Upper end of the critical-time search.
pub const T_MAX: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperQuery {
    pub direction: Direction,
    pub p: f64,
    pub q: f64,
    pub t: f64,
}

impl HyperQuery {
    /// Forward: `‖T_t f‖_p ≤ ‖f‖_q` with `1 < q ≤ p`.
    /// Reverse: `‖T_t f‖_q ≥ ‖f‖_p` with `q < p < 1`.
    pub fn new(direction: Direction, p: f64, q: f64, t: f64) -> Result<Self> {
        check_exponents(direction, p, q)?;
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("time must be finite and nonnegative, got {t}"));
        }
        Ok(Self { direction, p, q, t })
    }
}

fn check_exponents(direction: Direction, p: f64, q: f64) -> Result<()> {
    if !p.is_finite() || !q.is_finite() {
        return domain("exponents must be finite");
    }
    match direction {
        Direction::Forward if !(1.0 < q && q <= p) => domain(format!(
            "forward direction needs 1 < q <= p, got p = {p}, q = {q}"
        )),
        Direction::Reverse if !(q < p && p < 1.0) => domain(format!(
            "reverse direction needs q < p < 1, got p = {p}, q = {q}"
        )),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    NoCounterexampleFound,
    Violated,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchBudget {
    pub restarts: usize,
    /// Objective evaluations per restart; defaults to `300 · |Ω|`.
    pub max_evals: Option<usize>,
    /// Points of the exact grid used on two-point spaces.
    pub grid_points: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_evals: None,
            grid_points: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InequalityVerdict {
    pub query: HyperQuery,
    pub status: VerdictStatus,
    /// Normalized so the right-hand norm equals 1; present when violated.
    pub witness: Option<RealFunction>,
    /// Smallest signed log-norm gap found.
    pub deficit: f64,
    pub restarts: usize,
    pub seed: u64,
    pub evaluations: usize,
}

/// Signed log gap for `f = e^u`; negative means the inequality fails at `f`.
pub fn log_gap<S: Semigroup + ?Sized>(sg: &S, query: &HyperQuery, u: &[f64]) -> f64 {
    let mu = sg.mu();
    let m = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = u.iter().map(|x| x - m).collect();
    let f: Vec<f64> = w.iter().map(|x| x.exp()).collect();
    let tf = match sg.heat(query.t, &f) {
        Ok(v) => v,
        Err(_) => return f64::NAN,
    };
    let floor = f.iter().cloned().fold(f64::INFINITY, f64::min) * 1e-3;
    let ltf: Vec<f64> = tf.iter().map(|v| v.max(floor).ln()).collect();
    let norm = |v: &[f64], r: f64| weighted::log_norm_from_log(mu, v, r).unwrap_or(f64::NAN);
    match query.direction {
        Direction::Reverse => norm(&ltf, query.q) - norm(&w, query.p),
        Direction::Forward => norm(&w, query.q) - norm(&ltf, query.p),
    }
}

pub fn verify<S: Semigroup + ?Sized>(
    sg: &S,
    query: &HyperQuery,
    budget: &SearchBudget,
    seed: u64,
) -> Result<InequalityVerdict> {
    check_exponents(query.direction, query.p, query.q)?;
    let n = sg.len();
    let mu = sg.mu().to_vec();
    let mut best: (f64, Vec<f64>) = (0.0, vec![0.0; n]);
    let mut evaluations = 0usize;

    if n == 2 {
        let grid = linspace(
            -2.0 * SEARCH_BOX,
            2.0 * SEARCH_BOX,
            budget.grid_points.max(3),
        );
        let step = grid[1] - grid[0];
        let mut arg = 0.0;
        for &s in &grid {
            let g = log_gap(sg, query, &[s, 0.0]);
            if g < best.0 {
                best.0 = g;
                arg = s;
            }
        }
        evaluations += grid.len();
        let mut obj = |s: f64| {
            let g = log_gap(sg, query, &[s, 0.0]);
            if g.is_nan() {
                f64::INFINITY
            } else {
                g
            }
        };
        let (s, v) = golden_section(&mut obj, arg - step, arg + step, 60);
        evaluations += 62;
        if v < best.0 {
            best.0 = v;
            arg = s;
        }
        best.1 = vec![arg, 0.0];
    }

    let restarts = budget.restarts;
    let max_evals = budget.max_evals.unwrap_or(300 * n).max(10);
    if n > 2 || restarts > 0 {
        let phi = sg.gap_vector()?.unwrap_or_else(|| vec![0.0; n]);
        let ps = phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let runs: Vec<(f64, Vec<f64>, usize)> = (0..restarts)
            .into_par_iter()
            .map(|k| {
                let mut rng = substream(seed, k as u64);
                let start: Vec<f64> = if k == 0 && ps > 0.0 {
                    phi.iter().map(|v| 0.5 * v / ps).collect()
                } else if k >= 1 && k <= n {
                    // near-indicator of a single point
                    (0..n)
                        .map(|x| if x == k - 1 { 0.0 } else { -SEARCH_BOX * 0.75 })
                        .collect()
                } else if k > n && k <= 2 * n {
                    (0..n)
                        .map(|x| {
                            if x == k - n - 1 {
                                -SEARCH_BOX * 0.75
                            } else {
                                0.0
                            }
                        })
                        .collect()
                } else {
                    let amp = [0.1, 1.0, 4.0, SEARCH_BOX][k % 4];
                    (0..n).map(|_| rng.random_range(-amp..amp)).collect()
                };
                let mut obj = |x: &[f64]| {
                    let u: Vec<f64> = x.iter().map(|v| v.clamp(-SEARCH_BOX, SEARCH_BOX)).collect();
                    let g = log_gap(sg, query, &u);
                    if g.is_nan() {
                        f64::INFINITY
                    } else {
                        g
                    }
                };
                let step = start.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(0.2) * 0.25;
                let m = nelder_mead(&mut obj, &start, step, max_evals, 1e-15);
                let u: Vec<f64> =
                    m.x.iter()
                        .map(|v| v.clamp(-SEARCH_BOX, SEARCH_BOX))
                        .collect();
                (m.value, u, m.evaluations)
            })
            .collect();
        for r in runs {
            evaluations += r.2;
            if r.0 < best.0 {
                best = (r.0, r.1);
            }
        }
    }

    let deficit = best.0;
    let violated = deficit < -VIOLATION_TOL;
    let witness = if violated {
        let inner = match query.direction {
            Direction::Reverse => query.p,
            Direction::Forward => query.q,
        };
        let u = &best.1;
        let m = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = u.iter().map(|x| x - m).collect();
        let ln = weighted::log_norm_from_log(&mu, &w, inner)?;
        Some(RealFunction::new(
            sg.space().clone(),
            w.iter().map(|x| (x - ln).exp()).collect(),
        )?)
    } else {
        None
    };
    Ok(InequalityVerdict {
        query: *query,
        status: if violated {
            VerdictStatus::Violated
        } else {
            VerdictStatus::NoCounterexampleFound
        },
        witness,
        deficit,
        restarts,
        seed,
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalTime {
    pub t_star: f64,
    pub bracket: (f64, f64),
    /// Set when no sign change was found in `[0, 50]`.
    pub one_sided: bool,
}

/// Smallest time at which the search finds no counterexample, by bisection.
pub fn critical_time<S: Semigroup + ?Sized>(
    sg: &S,
    direction: Direction,
    p: f64,
    q: f64,
    budget: &SearchBudget,
    seed: u64,
) -> Result<CriticalTime> {
    check_exponents(direction, p, q)?;
    let holds = |t: f64| -> Result<bool> {
        let v = verify(sg, &HyperQuery::new(direction, p, q, t)?, budget, seed)?;
        Ok(v.status == VerdictStatus::NoCounterexampleFound)
    };
    if holds(0.0)? {
        return Ok(CriticalTime {
            t_star: 0.0,
            bracket: (0.0, 0.0),
            one_sided: false,
        });
    }
    // geometric refinement of the upper end
    let mut lo = 0.0;
    let mut hi = None;
    let mut t = T_MAX / 1024.0;
    while t <= T_MAX {
        if holds(t)? {
            hi = Some(t);
            break;
        }
        lo = t;
        t *= 2.0;
    }
    let Some(mut hi) = hi.or_else(|| {
        (lo < T_MAX)
            .then_some(T_MAX)
            .filter(|_| holds(T_MAX).unwrap_or(false))
    }) else {
        return Ok(CriticalTime {
            t_star: T_MAX,
            bracket: (T_MAX, f64::INFINITY),
            one_sided: true,
        });
    };
    while hi - lo > 5e-4 {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalTime {
        t_star: 0.5 * (lo + hi),
        bracket: (lo, hi),
        one_sided: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdFamily {
    /// `(C/4) log((1−q)/(1−p))`, reverse, needs `C`.
    General,
    /// `log((1−q)/(1−p))`, reverse, simple operators.
    Simple,
    /// Improved simple-operator times; `q < 0 < p` is excluded.
    SimpleStrong,
    /// `−(C/4) log((1−p)(1−q))`, two functions, needs `C`.
    TwoFunctionGeneral,
    /// `log((2−p)(2−q)/(4(1−p)(1−q)))`, two functions, simple operators.
    TwoFunctionSimple,
    /// `½ log((1−q)/(1−p))`, the sharp two-point time.
    Borell,
    /// `(C/4) log((p−1)/(q−1))`, forward, needs `C`.
    ForwardGeneral,
    /// `½ log((p−1)/(q−1))`, forward, sharp two-point time.
    ForwardTwoPoint,
}

pub fn threshold(family: ThresholdFamily, p: f64, q: f64, c: Option<f64>) -> Result<f64> {
    use ThresholdFamily::*;
    if !p.is_finite() || !q.is_finite() {
        return domain("exponents must be finite");
    }
    let need_c = || -> Result<f64> {
        match c {
            Some(c) if c > 0.0 && c.is_finite() => Ok(c),
            _ => domain("this family needs a positive constant C"),
        }
    };
    let reverse = || check_exponents(Direction::Reverse, p, q);
    let two_fn = || -> Result<()> {
        if 0.0 < p && p < 1.0 && 0.0 < q && q < 1.0 {
            Ok(())
        } else {
            domain(format!(
                "two-function times need p, q in (0, 1), got p = {p}, q = {q}"
            ))
        }
    };
    match family {
        General => {
            reverse()?;
            Ok(need_c()? / 4.0 * ((1.0 - q) / (1.0 - p)).ln())
        }
        Simple => {
            reverse()?;
            Ok(((1.0 - q) / (1.0 - p)).ln())
        }
        SimpleStrong => {
            reverse()?;
            if q >= 0.0 {
                Ok(((1.0 - q) * (2.0 - p) / ((1.0 - p) * (2.0 - q))).ln())
            } else if p <= 0.0 {
                Ok(((2.0 - q) / (2.0 - p)).ln())
            } else {
                domain("the improved simple time is not available for q < 0 < p")
            }
        }
        TwoFunctionGeneral => {
            two_fn()?;
            Ok(-need_c()? / 4.0 * ((1.0 - p) * (1.0 - q)).ln())
        }
        TwoFunctionSimple => {
            two_fn()?;
            Ok(((2.0 - p) * (2.0 - q) / (4.0 * (1.0 - p) * (1.0 - q))).ln())
        }
        Borell => {
            reverse()?;
            Ok(0.5 * ((1.0 - q) / (1.0 - p)).ln())
        }
        ForwardGeneral => {
            check_exponents(Direction::Forward, p, q)?;
            Ok(need_c()? / 4.0 * ((p - 1.0) / (q - 1.0)).ln())
        }
        ForwardTwoPoint => {
            check_exponents(Direction::Forward, p, q)?;
            Ok(0.5 * ((p - 1.0) / (q - 1.0)).ln())
        }
    }
}

/// `θ(q) − 1 = q e^{E(q)}`; returns `(q e^{E}, θ)` with the product kept separately.
fn theta_parts(q: f64) -> Result<(f64, f64)> {
    if !(q < 0.0) || !q.is_finite() {
        return domain(format!("theta needs a finite q < 0, got {q}"));
    }
    let e = -(2.0 - q).ln() + (2.0 * (-q / 2.0).ln_1p() - (-q).ln_1p()) / q;
    let d = q * e.exp();
    Ok((d, 1.0 + d))
}

/// `θ(q) = 1 + q (2−q)^{−1+2/q} [4(1−q)]^{−1/q}` for `q < 0`.
pub fn theta(q: f64) -> Result<f64> {
    Ok(theta_parts(q)?.1)
}

/// `η(q) = −log θ(q)`, the time from which `‖T_t f‖_q ≥ ‖f‖_0` holds for simple operators.
pub fn eta(q: f64) -> Result<f64> {
    Ok(-theta_parts(q)?.0.ln_1p())
}

/// `τ(p) = −log θ(p')` for `p ∈ (0, 1)`.
pub fn tau(p: f64) -> Result<f64> {
    if !(0.0 < p && p < 1.0) {
        return domain(format!("tau needs p in (0, 1), got {p}"));
    }
    eta(holder_conjugate(p)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoFunctionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `𝔼[f T_t g] ≥ ‖f‖_p ‖g‖_q` for nonnegative `f`, `g` and `p, q ∈ (0, 1)`.
pub fn two_function_check<S: Semigroup + ?Sized>(
    sg: &S,
    f: &[f64],
    g: &[f64],
    p: f64,
    q: f64,
    t: f64,
) -> Result<TwoFunctionCheck> {
    if !(0.0 < p && p < 1.0 && 0.0 < q && q < 1.0) {
        return domain(format!("need p, q in (0, 1), got p = {p}, q = {q}"));
    }
    if f.len() != sg.len() || g.len() != sg.len() {
        return domain("functions and generator live on different spaces");
    }
    let mu = sg.mu();
    let tg = sg.heat(t, g)?;
    let lhs = ksum((0..f.len()).map(|x| mu[x] * f[x] * tg[x]));
    let rhs = weighted::p_norm_nonnegative(mu, f, p)? * weighted::p_norm_nonnegative(mu, g, q)?;
    Ok(TwoFunctionCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-10,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReverseHolder {
    pub norm: f64,
    /// Smallest `𝔼[f g]` over the optimizer and random feasible `g`.
    pub inf_estimate: f64,
    /// `𝔼[f g*]` at the analytic optimizer.
    pub optimizer_value: f64,
    pub trials: usize,
}

/// Reverse Hölder: `‖f‖_p = inf{𝔼 fg : g > 0, ‖g‖_{p'} ≥ 1}` for `p < 1`.
pub fn reverse_holder_check(
    f: &RealFunction,
    p: f64,
    trials: usize,
    seed: u64,
) -> Result<ReverseHolder> {
    if !(p < 1.0) || !p.is_finite() {
        return domain(format!("reverse Hölder needs p < 1, got {p}"));
    }
    if !f.is_strictly_positive() {
        return domain("reverse Hölder needs a strictly positive function");
    }
    let mu = f.space().mu();
    let fv = f.values();
    let pc = holder_conjugate(p)?;
    let norm = weighted::p_norm(mu, fv, p)?;
    let inner = |lg: &[f64]| -> Result<f64> {
        let ln = weighted::log_norm_from_log(mu, lg, pc)?;
        Ok(ksum(
            fv.iter()
                .zip(lg)
                .zip(mu)
                .map(|((a, b), m)| m * a * (b - ln).exp()),
        ))
    };
    let lstar: Vec<f64> = fv.iter().map(|v| (p - 1.0) * v.ln()).collect();
    let optimizer_value = inner(&lstar)?;
    let mut rng = substream(seed, 0);
    let n = fv.len();
    let mut best = optimizer_value;
    for _ in 0..trials {
        let lg: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        best = best.min(inner(&lg)?);
    }
    Ok(ReverseHolder {
        norm,
        inf_estimate: best,
        optimizer_value,
        trials,
    })
}

/// Poincaré constant `2t / (log(1−q) − log(1−p))` implied by reverse
/// hypercontractivity at `(p, q, t)`.
pub fn implied_poincare(p: f64, q: f64, t: f64) -> Result<f64> {
    check_exponents(Direction::Reverse, p, q)?;
    if !(t > 0.0) {
        return domain("time must be positive");
    }
    let d = (1.0 - q).ln() - (1.0 - p).ln();
    if d == 0.0 {
        return domain("log(1-q) equals log(1-p)");
    }
    Ok(2.0 * t / d)
}

/// Analytic `d/dp log‖T_{t(p)} f‖_p` given `t = t(p)` and `t' = t'(p)`:
/// `[Ent(h^p) − p² t' 𝓔(h^{p−1}, h)] / (p² 𝔼 h^p)` with `h = T_t f`.
pub fn log_norm_derivative<S: Semigroup + ?Sized>(
    sg: &S,
    f: &[f64],
    p: f64,
    t: f64,
    t_prime: f64,
) -> Result<f64> {
    if p == 0.0 || !p.is_finite() {
        return domain("the derivative formula needs a nonzero finite exponent");
    }
    let h = sg.heat(t, f)?;
    if h.iter().any(|v| !(*v > 0.0)) {
        return domain("heat image must be strictly positive");
    }
    let mu = sg.mu();
    let lh: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let hp: Vec<f64> = lh.iter().map(|v| (p * v).exp()).collect();
    let ent = weighted::entropy(mu, &hp)?;
    let hpm1: Vec<f64> = lh.iter().map(|v| ((p - 1.0) * v).exp()).collect();
    let dir = sg.dirichlet(&hpm1, &h);
    let mean = weighted::expect(mu, &hp);
    Ok((ent - p * p * t_prime * dir) / (p * p * mean))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_anchors() {
        let ln2 = 2f64.ln();
        assert!(
            (threshold(ThresholdFamily::General, 0.5, 0.0, Some(4.0)).unwrap() - ln2).abs() < 1e-15
        );
        assert!(
            (threshold(ThresholdFamily::SimpleStrong, 0.5, 0.0, None).unwrap() - 1.5f64.ln()).abs()
                < 1e-15
        );
        assert!(
            (threshold(ThresholdFamily::TwoFunctionSimple, 0.5, 0.5, None).unwrap() - 2.25f64.ln())
                .abs()
                < 1e-15
        );
        assert!(threshold(ThresholdFamily::SimpleStrong, 0.5, -0.5, None).is_err());
        assert!(threshold(ThresholdFamily::General, 0.5, 0.0, None).is_err());
    }

    #[test]
    fn theta_anchors() {
        assert!((theta(-1.0).unwrap() - 19.0 / 27.0).abs() < 1e-15);
        assert!((theta(-1e-6).unwrap() - (1.0 - 5e-7)).abs() < 1e-12);
        assert!(theta(0.5).is_err());
        let e = eta(-1e-3).unwrap();
        assert!((e - 4.997_501_821_420_563e-4).abs() < 1e-15);
    }

    #[test]
    fn implied_poincare_anchor() {
        let v = implied_poincare(0.5, 0.0, 1.5f64.ln()).unwrap();
        assert!((v - 2.0 * 1.5f64.ln() / 2f64.ln()).abs() < 1e-15);
    }
}
