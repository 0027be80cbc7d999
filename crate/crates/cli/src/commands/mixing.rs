use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Subcommand};
use revhyp::io;
use revhyp::measure::ProbabilitySpace;
use revhyp::mixing::{
    alpha_zero_counterexample, classical_bounds, correlated_sampler, correlated_set_bound,
    exact_joint, exhaustive_correlated_check, kernel_with_alpha, mixing_sweep,
    product_improved_bound, two_set_bound, CorrelatedProductInstance, Coupling, CouplingParam,
    SetBound, TwoSetInstance,
};
use revhyp::semigroup::{kernel_decompose, Generator, MarkovKernel, Semigroup};
use revhyp::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::util::{csv_table, f, need, need_path, num, nums, params};
use crate::{Ctx, Outcome};

#[derive(Debug, Subcommand)]
pub enum MixingCmd {
    /// Lower bound on the two-set joint probability from a log-Sobolev constant.
    Bound(BoundArgs),
    /// Exact joint probability on an explicit generator.
    Exact(ExactArgs),
    /// Bound, exact value and Monte Carlo interval over several times.
    Sweep(SweepArgs),
    /// Correlated-set lower bound `ε^exponent`.
    Correlated(CorrelatedBoundArgs),
    /// Spectral-gap and mixing-time comparison bounds.
    Classical(ClassicalArgs),
    /// Sharper bound for product walks at per-coordinate time τ.
    Product(ProductArgs),
}

#[derive(Debug, Subcommand)]
pub enum CorrelatedCmd {
    /// Check the bound on every pair of subsets of a small product.
    Check(CouplingArgs),
    /// Split a kernel into a simple heat kernel and a remainder.
    Decompose(KernelArgs),
    /// The zero-α kernel where no bound is possible.
    AlphaZero,
    /// Draw correlated pairs.
    Sample(SampleArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct BoundArgs {
    #[arg(long = "C")]
    #[serde(rename = "C")]
    c: Option<f64>,
    /// `√(2 log(1/μ(A)))`; alternatively give `--pa`.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Measure of A.
    #[arg(long)]
    pa: Option<f64>,
    #[arg(long)]
    pb: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExactArgs {
    #[arg(long)]
    gen: Option<PathBuf>,
    /// JSON list of point indices.
    #[arg(long = "A")]
    #[serde(rename = "A")]
    a_set: Option<PathBuf>,
    #[arg(long = "B")]
    #[serde(rename = "B")]
    b_set: Option<PathBuf>,
    #[arg(long)]
    t: Option<f64>,
    /// Log-Sobolev constant to compare against.
    #[arg(long = "C")]
    #[serde(rename = "C")]
    c: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    gen: Option<PathBuf>,
    #[arg(long = "A")]
    #[serde(rename = "A")]
    a_set: Option<PathBuf>,
    #[arg(long = "B")]
    #[serde(rename = "B")]
    b_set: Option<PathBuf>,
    #[arg(long = "C")]
    #[serde(rename = "C")]
    c: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct CorrelatedBoundArgs {
    #[arg(long)]
    rho: Option<f64>,
    /// Minimal atom of a kernel coupling.
    #[arg(long)]
    alpha: Option<f64>,
    /// With `--rho`, use the improved exponent `2/(1−ρ) + κ(1−ρ)`.
    #[arg(long, allow_negative_numbers = true)]
    kappa: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassicalArgs {
    /// Relaxation time.
    #[arg(long = "D")]
    #[serde(rename = "D")]
    d: Option<f64>,
    /// Total-variation distance at time t.
    #[arg(long)]
    eps_tv: Option<f64>,
    #[arg(long)]
    pa: Option<f64>,
    #[arg(long)]
    pb: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ProductArgs {
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct CouplingArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Copy probability; the factor space defaults to the uniform two-point space.
    #[arg(long)]
    rho: Option<f64>,
    /// Built-in two-point kernel with this minimal atom.
    #[arg(long)]
    alpha: Option<f64>,
    /// Kernel file; its space is the factor.
    #[arg(long)]
    kernel: Option<PathBuf>,
    /// Factor space for `--rho`.
    #[arg(long)]
    space: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct KernelArgs {
    #[arg(long)]
    kernel: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    coupling: CouplingArgs,
    #[arg(long, default_value_t = 10)]
    count: usize,
}

fn set_bound_json(b: &SetBound) -> Value {
    match b {
        SetBound::Value { value, exponent } => {
            json!({ "status": "value", "value": num(*value), "exponent": num(*exponent) })
        }
        SetBound::NoBound { reason } => json!({ "status": "no-bound", "reason": reason }),
    }
}

fn radius(direct: Option<f64>, measure: Option<f64>, flag: &str) -> Result<f64> {
    match (direct, measure) {
        (Some(v), None) => Ok(v),
        (None, Some(p)) if p > 0.0 && p <= 1.0 => Ok((-2.0 * p.ln()).max(0.0).sqrt()),
        (None, Some(p)) => Err(Error::Domain(format!(
            "set measure must lie in (0, 1], got {p}"
        ))),
        (Some(_), Some(_)) => Err(Error::Parameter(format!(
            "give --{flag} or --p{flag}, not both"
        ))),
        (None, None) => Err(Error::Parameter(format!(
            "missing required flag --{flag} (or --p{flag})"
        ))),
    }
}

fn two_sets(
    gen: &Option<PathBuf>,
    a: &Option<PathBuf>,
    b: &Option<PathBuf>,
) -> Result<(Generator, Vec<usize>, Vec<usize>)> {
    let g = io::read_generator(need_path(gen, "gen")?)?;
    let sa = io::read_set(need_path(a, "A")?, g.space())?;
    let sb = io::read_set(need_path(b, "B")?, g.space())?;
    Ok((g, sa, sb))
}

pub fn run(cmd: MixingCmd, ctx: &Ctx) -> Result<Outcome> {
    match cmd {
        MixingCmd::Bound(a) => {
            let ra = radius(a.a, a.pa, "a")?;
            let rb = radius(a.b, a.pb, "b")?;
            let v = two_set_bound(*need(&a.c, "C")?, ra, rb, *need(&a.t, "t")?)?;
            Ok(Outcome::new(
                "mixing bound",
                params(&a),
                json!({ "a": num(ra), "b": num(rb), "value": num(v) }),
            ))
        }
        MixingCmd::Exact(a) => {
            let (g, sa, sb) = two_sets(&a.gen, &a.a_set, &a.b_set)?;
            let t = *need(&a.t, "t")?;
            let inst = TwoSetInstance::new(g.mu(), sa, sb, t)?;
            let exact = exact_joint(&g, &inst.a_set, &inst.b_set, t)?;
            let mut r = json!({
                "pi_a": num(inst.pi_a),
                "pi_b": num(inst.pi_b),
                "a": num(inst.a),
                "b": num(inst.b),
                "exact": num(exact),
            });
            let mut out = None;
            if let Some(c) = a.c {
                let bound = inst.bound(c)?;
                let holds = exact >= bound - 1e-12;
                r["bound"] = num(bound);
                r["holds"] = json!(holds);
                out = Some(holds);
            }
            let o = Outcome::new("mixing exact", params(&a), r);
            Ok(match out {
                Some(h) => o.holds(h),
                None => o,
            })
        }
        MixingCmd::Sweep(a) => {
            let (g, sa, sb) = two_sets(&a.gen, &a.a_set, &a.b_set)?;
            let times = need(&a.times, "times")?;
            let rows = mixing_sweep(&g, &sa, &sb, *need(&a.c, "C")?, times, a.trials, ctx.seed)?;
            let holds = rows.iter().all(|r| r.exact >= r.bound - 1e-12);
            let csv = csv_table(
                &["t", "bound", "exact", "mc_lo", "mc_hi"],
                rows.iter()
                    .map(|r| vec![f(r.t), f(r.bound), f(r.exact), f(r.mc_lo), f(r.mc_hi)]),
            );
            let rows_json: Vec<Value> = rows
                .iter()
                .map(|r| json!({ "t": num(r.t), "bound": num(r.bound), "exact": num(r.exact), "mc_lo": num(r.mc_lo), "mc_hi": num(r.mc_hi) }))
                .collect();
            Ok(Outcome::new(
                "mixing sweep",
                params(&a),
                json!({ "rows": rows_json, "holds": holds }),
            )
            .holds(holds)
            .csv(csv))
        }
        MixingCmd::Correlated(a) => {
            let c = match (a.rho, a.alpha, a.kappa) {
                (Some(rho), None, None) => CouplingParam::Rho { rho },
                (Some(rho), None, Some(kappa)) => CouplingParam::Improved { rho, kappa },
                (None, Some(alpha), None) => CouplingParam::Kernel { alpha },
                _ => return Err(Error::Parameter("give --rho [--kappa] or --alpha".into())),
            };
            let b = correlated_set_bound(&c, *need(&a.eps, "eps")?)?;
            Ok(Outcome::new(
                "mixing correlated",
                params(&a),
                set_bound_json(&b),
            ))
        }
        MixingCmd::Classical(a) => {
            let b = classical_bounds(
                *need(&a.d, "D")?,
                *need(&a.eps_tv, "eps-tv")?,
                *need(&a.pa, "pa")?,
                *need(&a.pb, "pb")?,
                *need(&a.t, "t")?,
            );
            Ok(Outcome::new(
                "mixing classical",
                params(&a),
                json!({ "expander": num(b.expander), "mixing_time": num(b.mixing_time) }),
            ))
        }
        MixingCmd::Product(a) => {
            let v = product_improved_bound(
                *need(&a.tau, "tau")?,
                *need(&a.a, "a")?,
                *need(&a.b, "b")?,
            )?;
            Ok(Outcome::new(
                "mixing product",
                params(&a),
                json!({ "value": num(v) }),
            ))
        }
    }
}

fn instance(a: &CouplingArgs) -> Result<CorrelatedProductInstance> {
    let n = *need(&a.n, "n")?;
    match (a.rho, a.alpha, &a.kernel) {
        (Some(rho), None, None) => {
            let factor = match &a.space {
                Some(p) => io::read_space(p)?,
                None => Arc::new(ProbabilitySpace::uniform(2)?),
            };
            CorrelatedProductInstance::new(factor, n, Coupling::Rho(rho))
        }
        (None, Some(alpha), None) => {
            let k = kernel_with_alpha(alpha)?;
            CorrelatedProductInstance::new(k.space().clone(), n, Coupling::Kernel(k))
        }
        (None, None, Some(path)) => {
            let k = io::read_kernel(path)?;
            CorrelatedProductInstance::new(k.space().clone(), n, Coupling::Kernel(k))
        }
        _ => Err(Error::Parameter(
            "give exactly one of --rho, --alpha, --kernel".into(),
        )),
    }
}

fn rows(k: &MarkovKernel) -> Vec<Value> {
    let m = k.matrix();
    (0..m.nrows())
        .map(|i| nums(&m.row(i).iter().copied().collect::<Vec<_>>()))
        .collect()
}

pub fn run_correlated(cmd: CorrelatedCmd, ctx: &Ctx) -> Result<Outcome> {
    match cmd {
        CorrelatedCmd::Check(a) => {
            let inst = instance(&a)?;
            let r = exhaustive_correlated_check(&inst)?;
            let holds = r.violations == 0;
            Ok(Outcome::new(
                "correlated check",
                params(&a),
                json!({
                    "n": r.n,
                    "coupling": inst.param(),
                    "exponent": r.exponent.map(num),
                    "pairs_checked": r.pairs_checked,
                    "violations": r.violations,
                    "min_slack": num(r.min_slack),
                    "holds": holds,
                }),
            )
            .holds(holds))
        }
        CorrelatedCmd::Decompose(a) => {
            let k = io::read_kernel(need_path(&a.kernel, "kernel")?)?;
            let d = kernel_decompose(&k)?;
            let alpha = revhyp::semigroup::kernel_alpha(&k);
            Ok(Outcome::new(
                "correlated decompose",
                params(&a),
                json!({
                    "alpha": num(alpha.alpha),
                    "alpha_star": num(d.alpha_star),
                    "remainder": rows(&d.s),
                }),
            ))
        }
        CorrelatedCmd::AlphaZero => {
            let w = alpha_zero_counterexample()?;
            Ok(Outcome::new(
                "correlated alpha-zero",
                json!({}),
                json!({ "alpha": num(w.alpha), "mu_a": num(w.mu_a), "nu_b": num(w.nu_b), "joint": num(w.joint) }),
            ))
        }
        CorrelatedCmd::Sample(a) => {
            let inst = instance(&a.coupling)?;
            let pairs: Vec<Value> = correlated_sampler(inst, ctx.seed)
                .take(a.count)
                .map(|(x, y)| json!({ "x": x, "y": y }))
                .collect();
            Ok(Outcome::new(
                "correlated sample",
                params(&a),
                json!({ "pairs": pairs }),
            ))
        }
    }
}
