use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use revhyp::hypercon::{
    critical_time, eta, implied_poincare, reverse_holder_check, tau, theta, threshold,
    two_function_check, verify, Direction, HyperQuery, InequalityVerdict, SearchBudget,
    ThresholdFamily, VerdictStatus,
};
use revhyp::io;
use revhyp::semigroup::{Generator, Semigroup};
use revhyp::Result;
use serde::Serialize;
use serde_json::{json, Value};

use crate::util::{need, need_path, num, nums, params};
use crate::{Ctx, Outcome};

#[derive(Debug, Subcommand)]
pub enum HyperCmd {
    /// Search for a counterexample at one time.
    Verify(VerifyArgs),
    /// Smallest time at which the search finds no counterexample.
    CriticalTime(CriticalArgs),
    /// Closed-form sufficient times.
    Threshold(ThresholdArgs),
    /// The θ and η functions at `q < 0`.
    Theta(QArgs),
    /// `τ(p) = η(p')` for `p ∈ (0, 1)`.
    Tau(PArgs),
    /// Poincaré constant implied by a reverse inequality.
    ImpliedPoincare(ImpliedArgs),
    /// `𝔼[f T_t g] ≥ ‖f‖_p ‖g‖_q` for nonnegative functions.
    TwoFunction(TwoFunctionArgs),
    /// Reverse Hölder duality at one function.
    ReverseHolder(ReverseHolderArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dir {
    #[value(alias = "reverse")]
    Rev,
    #[value(alias = "forward")]
    Fwd,
}

impl From<Dir> for Direction {
    fn from(d: Dir) -> Self {
        match d {
            Dir::Rev => Direction::Reverse,
            Dir::Fwd => Direction::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    General,
    Simple,
    SimpleStrong,
    TwoFunctionGeneral,
    TwoFunctionSimple,
    Borell,
    ForwardGeneral,
    ForwardTwoPoint,
}

impl From<Family> for ThresholdFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::General => ThresholdFamily::General,
            Family::Simple => ThresholdFamily::Simple,
            Family::SimpleStrong => ThresholdFamily::SimpleStrong,
            Family::TwoFunctionGeneral => ThresholdFamily::TwoFunctionGeneral,
            Family::TwoFunctionSimple => ThresholdFamily::TwoFunctionSimple,
            Family::Borell => ThresholdFamily::Borell,
            Family::ForwardGeneral => ThresholdFamily::ForwardGeneral,
            Family::ForwardTwoPoint => ThresholdFamily::ForwardTwoPoint,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long)]
    max_evals: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    grid_points: usize,
}

impl SearchArgs {
    fn budget(&self) -> SearchBudget {
        SearchBudget {
            restarts: self.restarts,
            max_evals: self.max_evals,
            grid_points: self.grid_points,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    gen: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rev")]
    dir: Dir,
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    search: SearchArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CriticalArgs {
    #[arg(long)]
    gen: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rev")]
    dir: Dir,
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    search: SearchArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ThresholdArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    /// Log-Sobolev constant for the general families.
    #[arg(long = "C")]
    #[serde(rename = "C")]
    c: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct QArgs {
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct PArgs {
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ImpliedArgs {
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct TwoFunctionArgs {
    #[arg(long)]
    gen: Option<PathBuf>,
    #[arg(long)]
    f: Option<PathBuf>,
    #[arg(long)]
    g: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReverseHolderArgs {
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long = "fn")]
    #[serde(rename = "fn")]
    function: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
}

fn generator(path: &Option<PathBuf>) -> Result<Generator> {
    io::read_generator(need_path(path, "gen")?)
}

pub fn verdict_json(v: &InequalityVerdict) -> Value {
    json!({
        "direction": v.query.direction,
        "p": num(v.query.p),
        "q": num(v.query.q),
        "t": num(v.query.t),
        "status": v.status,
        "witness": v.witness.as_ref().map(|w| nums(w.values())),
        "deficit": num(v.deficit),
        "restarts": v.restarts,
        "evaluations": v.evaluations,
    })
}

pub fn run(cmd: HyperCmd, ctx: &Ctx) -> Result<Outcome> {
    match cmd {
        HyperCmd::Verify(a) => {
            let g = generator(&a.gen)?;
            let q = HyperQuery::new(
                a.dir.into(),
                *need(&a.p, "p")?,
                *need(&a.q, "q")?,
                *need(&a.t, "t")?,
            )?;
            let v = verify(&g, &q, &a.search.budget(), ctx.seed)?;
            let holds = v.status == VerdictStatus::NoCounterexampleFound;
            let mut r = verdict_json(&v);
            r["labels"] = json!(g.space().labels());
            Ok(Outcome::new("hyper verify", params(&a), r).holds(holds))
        }
        HyperCmd::CriticalTime(a) => {
            let g = generator(&a.gen)?;
            let c = critical_time(
                &g,
                a.dir.into(),
                *need(&a.p, "p")?,
                *need(&a.q, "q")?,
                &a.search.budget(),
                ctx.seed,
            )?;
            Ok(Outcome::new(
                "hyper critical-time",
                params(&a),
                json!({
                    "t_star": num(c.t_star),
                    "bracket": [num(c.bracket.0), num(c.bracket.1)],
                    "one_sided": c.one_sided,
                    "states": g.len(),
                }),
            ))
        }
        HyperCmd::Threshold(a) => {
            let v = threshold(a.family.into(), *need(&a.p, "p")?, *need(&a.q, "q")?, a.c)?;
            Ok(Outcome::new(
                "hyper threshold",
                params(&a),
                json!({ "value": num(v) }),
            ))
        }
        HyperCmd::Theta(a) => {
            let q = *need(&a.q, "q")?;
            Ok(Outcome::new(
                "hyper theta",
                params(&a),
                json!({ "theta": num(theta(q)?), "eta": num(eta(q)?) }),
            ))
        }
        HyperCmd::Tau(a) => {
            let v = tau(*need(&a.p, "p")?)?;
            Ok(Outcome::new(
                "hyper tau",
                params(&a),
                json!({ "value": num(v) }),
            ))
        }
        HyperCmd::ImpliedPoincare(a) => {
            let v = implied_poincare(*need(&a.p, "p")?, *need(&a.q, "q")?, *need(&a.t, "t")?)?;
            Ok(Outcome::new(
                "hyper implied-poincare",
                params(&a),
                json!({ "value": num(v) }),
            ))
        }
        HyperCmd::TwoFunction(a) => {
            let g = generator(&a.gen)?;
            let f = io::read_function(need_path(&a.f, "f")?, g.space().clone())?;
            let h = io::read_function(need_path(&a.g, "g")?, g.space().clone())?;
            let c = two_function_check(
                &g,
                f.values(),
                h.values(),
                *need(&a.p, "p")?,
                *need(&a.q, "q")?,
                *need(&a.t, "t")?,
            )?;
            Ok(Outcome::new(
                "hyper two-function",
                params(&a),
                json!({ "lhs": num(c.lhs), "rhs": num(c.rhs), "holds": c.holds }),
            )
            .holds(c.holds))
        }
        HyperCmd::ReverseHolder(a) => {
            let space = io::read_space(need_path(&a.space, "space")?)?;
            let f = io::read_function(need_path(&a.function, "fn")?, space)?;
            let r = reverse_holder_check(&f, *need(&a.p, "p")?, a.trials, ctx.seed)?;
            let holds = r.inf_estimate >= r.norm * (1.0 - 1e-10);
            Ok(Outcome::new(
                "hyper reverse-holder",
                params(&a),
                json!({
                    "norm": num(r.norm),
                    "inf_estimate": num(r.inf_estimate),
                    "optimizer_value": num(r.optimizer_value),
                    "trials": r.trials,
                    "holds": holds,
                }),
            )
            .holds(holds))
        }
    }
}
