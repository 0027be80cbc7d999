//! p-log-Sobolev functionals and estimation of their optimal constants.
//!
//! For `p ∉ {0, 1}` both sides are computed in the self-dual form with
//! `g = f^p`, i.e. `Ent(g)` against `(p p'/4) 𝓔(g^{1/p}, g^{1/p'})`, which is
//! nonnegative for every exponent. Exponents within `1e-4` of 0 or 1 use the
//! limit forms.

use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::measure::{weighted, RealFunction};
use crate::numeric::{ksum, linspace};
use crate::optimize::{golden_section, nelder_mead};
use crate::rng::substream;
use crate::semigroup::{dirichlet_exp_log, dirichlet_of_powers, Semigroup};

/// Half-width of the bands around 0 and 1 that use the limit forms.
pub const LIMIT_BAND: f64 = 1e-4;
/// Dirichlet sides at or below this are treated as zero (ratio undefined).
pub const RATIO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogSobEvaluation {
    pub p: f64,
    pub entropy_side: f64,
    pub dirichlet_side: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    Grid2pt,
    Multistart,
    Exhaustive,
}

#[derive(Debug, Clone, Serialize)]
pub struct RestartTrace {
    pub index: usize,
    pub best_ratio: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct ConstantEstimate {
    pub p: f64,
    /// Largest ratio found; a lower bound on the optimal constant.
    pub c_hat: f64,
    pub witness: RealFunction,
    pub method: EstimateMethod,
    pub restarts: usize,
    pub seed: u64,
    pub trace: Vec<RestartTrace>,
}

impl ConstantEstimate {
    /// FNV-1a hash over the per-restart best ratios, in restart order.
    pub fn trace_digest(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in &self.trace {
            for b in t.best_ratio.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        format!("{h:016x}")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EstimateBudget {
    /// Defaults to twice the number of states.
    pub restarts: Option<usize>,
    /// Objective evaluations per restart; defaults to `300 · |Ω|`.
    pub max_evals: Option<usize>,
    pub grid_points: usize,
    /// Random witnesses for the pointwise monotonicity audit.
    pub audit_witnesses: usize,
}

impl Default for EstimateBudget {
    fn default() -> Self {
        Self {
            restarts: None,
            max_evals: None,
            grid_points: 10_000,
            audit_witnesses: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Form {
    Zero,
    One,
    SelfDual,
}

fn form(p: f64) -> Form {
    if p.abs() < LIMIT_BAND {
        Form::Zero
    } else if (p - 1.0).abs() < LIMIT_BAND {
        Form::One
    } else {
        Form::SelfDual
    }
}

/// Both sides for `f = e^u`.
pub fn sides_from_log<S: Semigroup + ?Sized>(sg: &S, p: f64, u: &[f64]) -> (f64, f64) {
    let mu = sg.mu();
    match form(p) {
        Form::Zero => (
            weighted::variance(mu, u),
            -0.5 * dirichlet_of_powers(sg, u, 1.0, -1.0),
        ),
        Form::One => (entropy_of_exp(mu, u), 0.25 * dirichlet_exp_log(sg, u)),
        Form::SelfDual => {
            let v: Vec<f64> = u.iter().map(|x| p * x).collect();
            (
                entropy_of_exp(mu, &v),
                p * p / (4.0 * (p - 1.0)) * dirichlet_of_powers(sg, u, 1.0, p - 1.0),
            )
        }
    }
}

/// `Ent(e^v)` without the cancellation of the textbook formula.
pub fn entropy_of_exp(mu: &[f64], v: &[f64]) -> f64 {
    let c = weighted::expect(mu, v);
    let w: Vec<f64> = v.iter().map(|x| x - c).collect();
    let phi = ksum(mu.iter().zip(&w).map(|(m, x)| m * expm1_minus_x(*x)));
    let l = phi.ln_1p();
    let s = ksum(mu.iter().zip(&w).map(|(m, x)| m * x.exp_m1() * (x - l)));
    (c.exp() * (s - l)).max(0.0)
}

/// `e^x − 1 − x`, accurate for small `x`.
fn expm1_minus_x(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let mut term = x * x / 2.0;
        let mut sum = term;
        for k in 3..14 {
            term *= x / k as f64;
            sum += term;
        }
        sum
    } else {
        x.exp_m1() - x
    }
}

fn ratio_of(ent: f64, dir: f64) -> Option<f64> {
    (dir > RATIO_FLOOR).then(|| ent / dir)
}

pub fn logsob_evaluate<S: Semigroup + ?Sized>(
    sg: &S,
    p: f64,
    f: &RealFunction,
) -> Result<LogSobEvaluation> {
    if !p.is_finite() {
        return domain("exponent must be finite");
    }
    if f.values().len() != sg.len() {
        return domain("function and generator live on different spaces");
    }
    if !f.is_strictly_positive() {
        return domain("log-Sobolev functionals need a strictly positive function");
    }
    let u: Vec<f64> = f.values().iter().map(|v| v.ln()).collect();
    let (entropy_side, dirichlet_side) = sides_from_log(sg, p, &u);
    Ok(LogSobEvaluation {
        p,
        entropy_side,
        dirichlet_side,
        ratio: ratio_of(entropy_side, dirichlet_side),
    })
}

/// Evaluation in the self-dual parametrization, taking `g` directly.
pub fn logsob_evaluate_self_dual<S: Semigroup + ?Sized>(
    sg: &S,
    p: f64,
    g: &RealFunction,
) -> Result<LogSobEvaluation> {
    if form(p) == Form::Zero {
        return domain("p = 0 has no self-dual form; use the direct evaluation");
    }
    if !g.is_strictly_positive() {
        return domain("self-dual evaluation needs a strictly positive function");
    }
    let v: Vec<f64> = g.values().iter().map(|x| x.ln()).collect();
    let (e, d) = self_dual_sides(sg, p, &v);
    Ok(LogSobEvaluation {
        p,
        entropy_side: e,
        dirichlet_side: d,
        ratio: ratio_of(e, d),
    })
}

/// Sides for `g = e^v` in the self-dual form; also used by the audit.
fn self_dual_sides<S: Semigroup + ?Sized>(sg: &S, p: f64, v: &[f64]) -> (f64, f64) {
    let ent = entropy_of_exp(sg.mu(), v);
    let dir = if form(p) == Form::One {
        0.25 * dirichlet_exp_log(sg, v)
    } else {
        let pc = p / (p - 1.0);
        p * pc / 4.0 * dirichlet_of_powers(sg, v, 1.0 / p, 1.0 / pc)
    };
    (ent, dir)
}

/// Ratio with `u` recentred so its largest value is zero (both sides scale alike).
fn shifted_ratio<S: Semigroup + ?Sized>(sg: &S, p: f64, u: &[f64]) -> Option<f64> {
    let m = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(m - lo > 1e-7) {
        return None;
    }
    let w: Vec<f64> = u.iter().map(|x| x - m).collect();
    let (e, d) = sides_from_log(sg, p, &w);
    // the floor is relative to the scale set by the shift
    (d > 1e-300 && e.is_finite()).then(|| e / d)
}

fn recentre(mu: &[f64], u: &mut [f64]) {
    let m = weighted::expect(mu, u);
    u.iter_mut().for_each(|x| *x -= m);
}

const BOX: f64 = 30.0;

pub fn estimate_constant<S: Semigroup + ?Sized>(
    sg: &S,
    p: f64,
    budget: &EstimateBudget,
    seed: u64,
) -> Result<ConstantEstimate> {
    if !p.is_finite() {
        return domain("exponent must be finite");
    }
    let n = sg.len();
    if n < 2 {
        return domain("estimation needs at least two states");
    }
    let gap = sg.spectral_gap()?;
    if gap.reducible || !(gap.value > 0.0) {
        return Err(Error::UnboundedConstant);
    }
    let space = sg.space().clone();
    if n == 2 {
        let grid = linspace(-BOX, BOX, budget.grid_points.max(3));
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &s in &grid {
            if let Some(r) = shifted_ratio(sg, p, &[s, 0.0]) {
                if r > best.0 {
                    best = (r, s);
                }
            }
        }
        let step = 2.0 * BOX / (grid.len() - 1) as f64;
        let (s, r) = refine_two_point(sg, p, best.1, step);
        if r > best.0 {
            best = (r, s);
        }
        let witness = RealFunction::new(space, vec![best.1.exp(), 1.0])?;
        let c_hat = logsob_evaluate(sg, p, &witness)?.ratio.unwrap_or(best.0);
        return Ok(ConstantEstimate {
            p,
            c_hat,
            witness,
            method: EstimateMethod::Grid2pt,
            restarts: 1,
            seed,
            trace: vec![RestartTrace {
                index: 0,
                best_ratio: best.0,
                evaluations: grid.len(),
            }],
        });
    }

    let restarts = budget.restarts.unwrap_or(2 * n).max(1);
    let max_evals = budget.max_evals.unwrap_or(300 * n).max(10);
    let mu = sg.mu().to_vec();
    let phi = sg.gap_vector()?.unwrap_or_else(|| vec![0.0; n]);
    let phi_scale = phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let runs: Vec<(f64, Vec<f64>, usize)> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, k as u64);
            let (start, step) = if k == 0 && phi_scale > 0.0 {
                // the small-amplitude limit along the gap eigenvector gives 2/gap
                let mut best = (f64::NEG_INFINITY, 0.01);
                for a in [1e-3, 1e-2, 0.1, 0.3, 1.0, 3.0, -1e-2, -0.3, -1.0, -3.0] {
                    let u: Vec<f64> = phi.iter().map(|v| a * v / phi_scale).collect();
                    if let Some(r) = shifted_ratio(sg, p, &u) {
                        if r > best.0 {
                            best = (r, a);
                        }
                    }
                }
                let a = best.1;
                (
                    phi.iter().map(|v| a * v / phi_scale).collect::<Vec<_>>(),
                    0.25 * a.abs(),
                )
            } else {
                let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                recentre(&mu, &mut u);
                (u, 0.5)
            };
            let mut obj = |x: &[f64]| {
                let u: Vec<f64> = x.iter().map(|v| v.clamp(-BOX, BOX)).collect();
                match shifted_ratio(sg, p, &u) {
                    Some(r) => -r,
                    None => f64::INFINITY,
                }
            };
            let m = nelder_mead(&mut obj, &start, step, max_evals, 1e-13);
            let mut u: Vec<f64> = m.x.iter().map(|v| v.clamp(-BOX, BOX)).collect();
            recentre(&mu, &mut u);
            (-m.value, u, m.evaluations)
        })
        .collect();

    let mut best_idx = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.0 > runs[best_idx].0 {
            best_idx = i;
        }
    }
    let u = &runs[best_idx].1;
    let witness = RealFunction::new(space, u.iter().map(|v| v.exp()).collect())?;
    let c_hat = logsob_evaluate(sg, p, &witness)?
        .ratio
        .unwrap_or(runs[best_idx].0);
    let trace = runs
        .iter()
        .enumerate()
        .map(|(index, r)| RestartTrace {
            index,
            best_ratio: r.0,
            evaluations: r.2,
        })
        .collect();
    Ok(ConstantEstimate {
        p,
        c_hat,
        witness,
        method: EstimateMethod::Multistart,
        restarts,
        seed,
        trace,
    })
}

/// `s s' 𝓔(g^{1/s}, g^{1/s'})` for `g = e^v`, and `𝓔(log g, g)` at `s = 1`.
pub fn sv_quantity<S: Semigroup + ?Sized>(sg: &S, v: &[f64], s: f64) -> f64 {
    if s == 1.0 {
        dirichlet_exp_log(sg, v)
    } else {
        s * s / (s - 1.0) * dirichlet_of_powers(sg, v, 1.0 / s, (s - 1.0) / s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SvCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares the Stroock–Varopoulos quantities at `q` (lhs) and `p` (rhs).
pub fn sv_check<S: Semigroup + ?Sized>(
    sg: &S,
    g: &RealFunction,
    p: f64,
    q: f64,
) -> Result<SvCheck> {
    if !(0.0 < q && q < p && p <= 2.0) {
        return domain(format!("need 0 < q < p <= 2, got q = {q}, p = {p}"));
    }
    if !g.is_strictly_positive() {
        return domain("the comparison needs a strictly positive function");
    }
    let v: Vec<f64> = g.values().iter().map(|x| x.ln()).collect();
    let lhs = sv_quantity(sg, &v, q);
    let rhs = sv_quantity(sg, &v, p);
    Ok(SvCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-10,
    })
}

/// Best Poincaré constant `1/gap`; infinite when the gap vanishes.
pub fn poincare_constant<S: Semigroup + ?Sized>(sg: &S) -> Result<f64> {
    let g = sg.spectral_gap()?;
    Ok(if g.reducible || g.value <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / g.value
    })
}

/// Certified p-logSob constant from a q-logSob constant, `1 < q <= p <= 2`.
pub fn reversing_bound(c_q: f64, q: f64, p: f64) -> Result<f64> {
    if !(1.0 < q && q <= p && p <= 2.0) {
        return domain(format!("need 1 < q <= p <= 2, got q = {q}, p = {p}"));
    }
    Ok((p - 1.0) * q * q / ((q - 1.0) * p * p) * c_q)
}

#[derive(Debug, Clone, Serialize)]
pub struct PointwiseAudit {
    pub witnesses: usize,
    pub comparisons: usize,
    pub skipped_constant: usize,
    pub violations: usize,
    /// Largest `ratio_q − ratio_p` seen over pairs `q < p`.
    pub worst_excess: f64,
    /// Exponents left out of the pointwise check (no self-dual form).
    pub excluded_exponents: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MonotonicityAudit {
    pub estimates: Vec<ConstantEstimate>,
    pub pointwise: PointwiseAudit,
}

/// Self-dual ratio `4 Ent(g) / (p p' 𝓔(g^{1/p}, g^{1/p'}))` for `g = e^v`.
pub fn self_dual_ratio<S: Semigroup + ?Sized>(sg: &S, p: f64, v: &[f64]) -> Option<f64> {
    let (e, d) = self_dual_sides(sg, p, v);
    ratio_of(e, d)
}

/// Pointwise ratio comparison over random witnesses for all `q < p` in the grid.
pub fn pointwise_monotonicity<S: Semigroup + ?Sized>(
    sg: &S,
    grid: &[f64],
    witnesses: &[Vec<f64>],
) -> PointwiseAudit {
    let mut ps: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|p| form(*p) != Form::Zero)
        .collect();
    ps.sort_by(f64::total_cmp);
    let excluded = grid
        .iter()
        .copied()
        .filter(|p| form(*p) == Form::Zero)
        .collect();
    let mut audit = PointwiseAudit {
        witnesses: witnesses.len(),
        comparisons: 0,
        skipped_constant: 0,
        violations: 0,
        worst_excess: f64::NEG_INFINITY,
        excluded_exponents: excluded,
    };
    for v in witnesses {
        let ratios: Vec<Option<f64>> = ps.iter().map(|&p| self_dual_ratio(sg, p, v)).collect();
        if ratios.iter().any(|r| r.is_none()) {
            audit.skipped_constant += 1;
            continue;
        }
        for i in 0..ps.len() {
            for j in i + 1..ps.len() {
                let excess = ratios[i].unwrap() - ratios[j].unwrap();
                audit.comparisons += 1;
                audit.worst_excess = audit.worst_excess.max(excess);
                if excess > 1e-9 {
                    audit.violations += 1;
                }
            }
        }
    }
    audit
}

pub fn monotonicity_audit<S: Semigroup + ?Sized>(
    sg: &S,
    grid: &[f64],
    budget: &EstimateBudget,
    seed: u64,
) -> Result<MonotonicityAudit> {
    let estimates = grid
        .iter()
        .enumerate()
        .map(|(i, &p)| estimate_constant(sg, p, budget, seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mu = sg.mu();
    let n = sg.len();
    let mut rng = substream(seed, u64::MAX);
    let mut witnesses: Vec<Vec<f64>> = (0..budget.audit_witnesses)
        .map(|_| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            recentre(mu, &mut v);
            v
        })
        .collect();
    // constant witness exercises the skip path
    witnesses.push(vec![0.0; n]);
    for e in &estimates {
        let v: Vec<f64> = e.witness.values().iter().map(|x| e.p * x.ln()).collect();
        witnesses.push(v);
    }
    Ok(MonotonicityAudit {
        estimates,
        pointwise: pointwise_monotonicity(sg, grid, &witnesses),
    })
}

/// Builds a positive function from log-values on the generator's space.
pub fn exp_function<S: Semigroup + ?Sized>(sg: &S, u: &[f64]) -> Result<RealFunction> {
    RealFunction::new(Arc::clone(sg.space()), u.iter().map(|v| v.exp()).collect())
}

/// Refines a two-point grid maximum by golden section; exposed for callers
/// that want sub-grid resolution.
pub fn refine_two_point<S: Semigroup + ?Sized>(sg: &S, p: f64, s0: f64, width: f64) -> (f64, f64) {
    let mut f = |s: f64| {
        shifted_ratio(sg, p, &[s, 0.0])
            .map(|r| -r)
            .unwrap_or(f64::INFINITY)
    };
    let (s, v) = golden_section(&mut f, s0 - width, s0 + width, 100);
    (s, -v)
}
