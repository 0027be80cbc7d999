use std::path::PathBuf;

use clap::{Args, Subcommand};
use rand::Rng as _;
use revhyp::io;
use revhyp::logsob::{
    estimate_constant, logsob_evaluate, monotonicity_audit, poincare_constant, reversing_bound,
    sv_check, ConstantEstimate, EstimateBudget, PointwiseAudit,
};
use revhyp::measure::RealFunction;
use revhyp::rng::substream;
use revhyp::semigroup::{Generator, Semigroup};
use revhyp::Result;
use serde::Serialize;
use serde_json::{json, Value};

use crate::util::{need, need_path, num, nums, opt, params};
use crate::{Ctx, Outcome};

#[derive(Debug, Subcommand)]
pub enum LogsobCmd {
    /// Lower estimate of the optimal p-log-Sobolev constant.
    Estimate(EstimateArgs),
    /// Both sides of the inequality at one function.
    Evaluate(EvaluateArgs),
    /// Estimates over an exponent grid plus the pointwise ratio audit.
    AuditMonotone(AuditArgs),
    /// Poincaré constant and spectral gap.
    Poincare(GenArgs),
    /// Certified p-constant from a q-constant, `1 < q <= p <= 2`.
    Reverse(ReverseArgs),
}

#[derive(Debug, Subcommand)]
pub enum SvCmd {
    /// Compare the q- and p-quantities at one positive function.
    Check(SvCheckArgs),
    /// Random positive functions and exponent pairs on one generator.
    Random(SvRandomArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long)]
    gen: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BudgetArgs {
    /// Multistart restarts (default: twice the state count).
    #[arg(long)]
    restarts: Option<usize>,
    /// Objective evaluations per restart.
    #[arg(long)]
    max_evals: Option<usize>,
    /// Grid points for two-point spaces.
    #[arg(long, default_value_t = 10_000)]
    grid_points: usize,
}

impl BudgetArgs {
    fn budget(&self) -> EstimateBudget {
        EstimateBudget {
            restarts: self.restarts,
            max_evals: self.max_evals,
            grid_points: self.grid_points,
            ..EstimateBudget::default()
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[arg(long)]
    gen: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    budget: BudgetArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    gen: Option<PathBuf>,
    #[arg(long = "fn")]
    #[serde(rename = "fn")]
    function: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct AuditArgs {
    #[arg(long)]
    gen: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [0.0, 0.5, 1.0, 1.5, 2.0])]
    grid: Vec<f64>,
    /// Random witnesses for the pointwise check.
    #[arg(long, default_value_t = 64)]
    witnesses: usize,
    #[command(flatten)]
    #[serde(flatten)]
    budget: BudgetArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ReverseArgs {
    /// Known q-log-Sobolev constant.
    #[arg(long = "C")]
    #[serde(rename = "C")]
    c: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SvCheckArgs {
    #[arg(long)]
    gen: Option<PathBuf>,
    #[arg(long = "fn")]
    #[serde(rename = "fn")]
    function: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SvRandomArgs {
    #[arg(long)]
    gen: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
}

fn generator(path: &Option<PathBuf>) -> Result<Generator> {
    io::read_generator(need_path(path, "gen")?)
}

fn function(g: &Generator, path: &Option<PathBuf>) -> Result<RealFunction> {
    io::read_function(need_path(path, "fn")?, g.space().clone())
}

pub fn estimate_json(e: &ConstantEstimate) -> Value {
    json!({
        "p": num(e.p),
        "c_hat": num(e.c_hat),
        "witness": nums(e.witness.values()),
        "method": e.method,
        "restarts": e.restarts,
        "trace_digest": e.trace_digest(),
        "trace": e.trace.iter().map(|t| json!({
            "index": t.index,
            "best_ratio": num(t.best_ratio),
            "evaluations": t.evaluations,
        })).collect::<Vec<_>>(),
    })
}

fn audit_json(a: &PointwiseAudit) -> Value {
    json!({
        "witnesses": a.witnesses,
        "comparisons": a.comparisons,
        "skipped_constant": a.skipped_constant,
        "violations": a.violations,
        "worst_excess": if a.comparisons > 0 { num(a.worst_excess) } else { Value::Null },
        "excluded_exponents": nums(&a.excluded_exponents),
    })
}

pub fn run(cmd: LogsobCmd, ctx: &Ctx) -> Result<Outcome> {
    match cmd {
        LogsobCmd::Estimate(a) => {
            let g = generator(&a.gen)?;
            let p = *need(&a.p, "p")?;
            let e = estimate_constant(&g, p, &a.budget.budget(), ctx.seed)?;
            let mut r = estimate_json(&e);
            r["labels"] = json!(g.space().labels());
            r["poincare_limit"] = num(2.0 * poincare_constant(&g)?);
            Ok(Outcome::new("logsob estimate", params(&a), r))
        }
        LogsobCmd::Evaluate(a) => {
            let g = generator(&a.gen)?;
            let f = function(&g, &a.function)?;
            let p = *need(&a.p, "p")?;
            let e = logsob_evaluate(&g, p, &f)?;
            Ok(Outcome::new(
                "logsob evaluate",
                params(&a),
                json!({
                    "p": num(e.p),
                    "entropy_side": num(e.entropy_side),
                    "dirichlet_side": num(e.dirichlet_side),
                    "ratio": opt(e.ratio),
                }),
            ))
        }
        LogsobCmd::AuditMonotone(a) => {
            let g = generator(&a.gen)?;
            let budget = EstimateBudget {
                audit_witnesses: a.witnesses,
                ..a.budget.budget()
            };
            let audit = monotonicity_audit(&g, &a.grid, &budget, ctx.seed)?;
            let mut sorted: Vec<(f64, f64)> =
                audit.estimates.iter().map(|e| (e.p, e.c_hat)).collect();
            sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
            let nondecreasing = sorted.windows(2).all(|w| w[0].1 <= w[1].1 * (1.0 + 1e-9));
            let holds = audit.pointwise.violations == 0;
            Ok(Outcome::new(
                "logsob audit-monotone",
                params(&a),
                json!({
                    "estimates": audit.estimates.iter().map(estimate_json).collect::<Vec<_>>(),
                    "estimates_nondecreasing": nondecreasing,
                    "pointwise": audit_json(&audit.pointwise),
                    "holds": holds,
                }),
            )
            .holds(holds))
        }
        LogsobCmd::Poincare(a) => {
            let g = generator(&a.gen)?;
            let gap = g.spectral_gap()?;
            Ok(Outcome::new(
                "logsob poincare",
                params(&a),
                json!({
                    "spectral_gap": num(gap.value),
                    "reducible": gap.reducible,
                    "poincare_constant": num(poincare_constant(&g)?),
                }),
            ))
        }
        LogsobCmd::Reverse(a) => {
            let v = reversing_bound(*need(&a.c, "C")?, *need(&a.q, "q")?, *need(&a.p, "p")?)?;
            Ok(Outcome::new(
                "logsob reverse",
                params(&a),
                json!({ "value": num(v) }),
            ))
        }
    }
}

pub fn run_sv(cmd: SvCmd, ctx: &Ctx) -> Result<Outcome> {
    match cmd {
        SvCmd::Check(a) => {
            let g = generator(&a.gen)?;
            let f = function(&g, &a.function)?;
            let c = sv_check(&g, &f, *need(&a.p, "p")?, *need(&a.q, "q")?)?;
            Ok(Outcome::new(
                "sv check",
                params(&a),
                json!({ "lhs": num(c.lhs), "rhs": num(c.rhs), "holds": c.holds }),
            )
            .holds(c.holds))
        }
        SvCmd::Random(a) => {
            let g = generator(&a.gen)?;
            let n = g.len();
            let mut rng = substream(ctx.seed, 0);
            let mut violations = 0usize;
            let mut worst = f64::INFINITY;
            let mut worst_case = Value::Null;
            for _ in 0..a.trials {
                let u: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                let q = rng.random_range(0.01..1.99);
                let p: f64 = rng.random_range(q..2.0);
                let p = p.max(q + 1e-6).min(2.0);
                let f = RealFunction::new(g.space().clone(), u.iter().map(|v| v.exp()).collect())?;
                let c = sv_check(&g, &f, p, q)?;
                if !c.holds {
                    violations += 1;
                }
                let slack = c.lhs - c.rhs;
                if slack < worst {
                    worst = slack;
                    worst_case = json!({ "p": num(p), "q": num(q), "values": nums(f.values()), "slack": num(slack) });
                }
            }
            let holds = violations == 0;
            Ok(Outcome::new(
                "sv random",
                params(&a),
                json!({ "trials": a.trials, "violations": violations, "tightest": worst_case, "holds": holds }),
            )
            .holds(holds))
        }
    }
}
