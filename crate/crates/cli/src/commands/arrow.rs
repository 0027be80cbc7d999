use std::path::PathBuf;

use clap::{Args, Subcommand};
use revhyp::io;
use revhyp::social_choice::{
    delta_for_epsilon, paradox_by_profiles, paradox_mc, paradox_probability,
    pivotal_intersection_exact, Pairwise,
};
use revhyp::{Error, Result};
use serde::Serialize;
use serde_json::json;

use crate::util::{need, need_path, num, params, to_value};
use crate::{Ctx, Outcome};

/// Largest voter count for which `arrow px` also enumerates profiles.
const PROFILE_CHECK_VOTERS: usize = 5;

#[derive(Debug, Subcommand)]
pub enum ArrowCmd {
    /// Influence of one voter under a biased measure.
    Influence(InfluenceArgs),
    /// Probability of a non-transitive outcome.
    Px(PxArgs),
    /// Joint probability of two pivotal events against its lower bound.
    Pivotal(PivotalArgs),
    /// The δ(ε) of the quantitative impossibility statement.
    Delta(DeltaArgs),
    /// Summary of a ranking distribution.
    Law(LawArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct InfluenceArgs {
    /// Truth table file `{n, bias?, table}`.
    #[arg(long = "fn")]
    #[serde(rename = "fn")]
    function: Option<PathBuf>,
    /// Voter, counted from 1.
    #[arg(long)]
    i: Option<usize>,
    /// Probability of +1; overrides the file.
    #[arg(long)]
    bias: Option<f64>,
    /// Also report the influence restricted to degree at most this.
    #[arg(long)]
    degree: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct PxArgs {
    #[arg(long)]
    f1: Option<PathBuf>,
    #[arg(long)]
    f2: Option<PathBuf>,
    #[arg(long)]
    f3: Option<PathBuf>,
    #[arg(long)]
    law: Option<PathBuf>,
    /// Add a Monte Carlo estimate with this many profiles.
    #[arg(long)]
    mc: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct PivotalArgs {
    /// Aggregator of the a-versus-b preferences.
    #[arg(long)]
    f1: Option<PathBuf>,
    /// Aggregator of the b-versus-c preferences.
    #[arg(long)]
    f2: Option<PathBuf>,
    #[arg(long)]
    law: Option<PathBuf>,
    /// Voter pivotal for the first aggregator, counted from 1.
    #[arg(long)]
    i: Option<usize>,
    /// Voter pivotal for the second aggregator, counted from 1.
    #[arg(long)]
    j: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct DeltaArgs {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Absolute constant; no default is assumed.
    #[arg(long = "C")]
    #[serde(rename = "C")]
    c: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct LawArgs {
    #[arg(long)]
    law: Option<PathBuf>,
}

fn voter(i: Option<usize>, flag: &str) -> Result<usize> {
    match i {
        Some(v) if v >= 1 => Ok(v - 1),
        Some(_) => Err(Error::Domain(format!("--{flag} counts voters from 1"))),
        None => Err(Error::Parameter(format!("missing required flag --{flag}"))),
    }
}

pub fn run(cmd: ArrowCmd, ctx: &Ctx) -> Result<Outcome> {
    match cmd {
        ArrowCmd::Influence(a) => {
            let f = io::read_cube_function(need_path(&a.function, "fn")?, a.bias)?;
            let i = voter(a.i, "i")?;
            let s = f.influence_sandwich(i)?;
            let mut r = json!({
                "n": f.n(),
                "bias": num(f.bias()),
                "boolean": f.is_boolean(),
                "influence": num(s.influence),
                "variance_influence": num(s.variance_influence),
                "sandwich_holds": s.holds,
            });
            if let Some(d) = a.degree {
                r["low_degree_influence"] = num(f.low_degree_influence(i, d)?);
            }
            Ok(Outcome::new("arrow influence", params(&a), r).holds(s.holds))
        }
        ArrowCmd::Px(a) => {
            let f1 = io::read_cube_function(need_path(&a.f1, "f1")?, None)?;
            let f2 = io::read_cube_function(need_path(&a.f2, "f2")?, None)?;
            let f3 = io::read_cube_function(need_path(&a.f3, "f3")?, None)?;
            let law = io::read_law(need_path(&a.law, "law")?)?;
            let px = paradox_probability(&f1, &f2, &f3, &law)?;
            let mut r = json!({ "value": num(px.value), "n": f1.n(), "alpha": num(law.alpha()) });
            if f1.n() <= PROFILE_CHECK_VOTERS {
                r["by_profiles"] = num(paradox_by_profiles(&f1, &f2, &f3, &law)?);
            }
            if let Some(trials) = a.mc {
                let mc = paradox_mc(&f1, &f2, &f3, &law, trials, ctx.seed)?;
                r["mc"] = to_value(&mc.mc);
            }
            Ok(Outcome::new("arrow px", params(&a), r))
        }
        ArrowCmd::Pivotal(a) => {
            let f1 = io::read_cube_function(need_path(&a.f1, "f1")?, None)?;
            let f2 = io::read_cube_function(need_path(&a.f2, "f2")?, None)?;
            let law = io::read_law(need_path(&a.law, "law")?)?;
            let c = pivotal_intersection_exact(&f1, &f2, &law, voter(a.i, "i")?, voter(a.j, "j")?)?;
            Ok(Outcome::new(
                "arrow pivotal",
                params(&a),
                json!({
                    "p_a": num(c.p_a),
                    "p_b": num(c.p_b),
                    "joint": num(c.joint),
                    "eps": num(c.eps),
                    "bound": num(c.bound),
                    "alpha": num(c.alpha),
                    "holds": c.holds,
                }),
            )
            .holds(c.holds))
        }
        ArrowCmd::Delta(a) => {
            let d = delta_for_epsilon(
                *need(&a.eps, "eps")?,
                *need(&a.alpha, "alpha")?,
                *need(&a.c, "C")?,
            )?;
            Ok(Outcome::new(
                "arrow delta",
                params(&a),
                json!({ "log_delta": num(d.log_delta), "delta": num(d.delta) }),
            ))
        }
        ArrowCmd::Law(a) => {
            let law = io::read_law(need_path(&a.law, "law")?)?;
            let pairs = [
                (Pairwise::AB, Pairwise::BC),
                (Pairwise::BC, Pairwise::CA),
                (Pairwise::CA, Pairwise::AB),
            ];
            let corr: Vec<_> = pairs
                .iter()
                .map(|&(x, y)| json!({ "first": x, "second": y, "correlation": num(law.correlation(x, y)) }))
                .collect();
            Ok(Outcome::new(
                "arrow law",
                params(&a),
                json!({
                    "alpha": num(law.alpha()),
                    "plus_probability": {
                        "ab": num(law.plus_probability(Pairwise::AB)),
                        "bc": num(law.plus_probability(Pairwise::BC)),
                        "ca": num(law.plus_probability(Pairwise::CA)),
                    },
                    "correlations": corr,
                }),
            ))
        }
    }
}
