use clap::{Args, Subcommand, ValueEnum};
use revhyp::chains::{self, Boundary, ChainSpec, RateFamily, TrajectorySampler};
use revhyp::io::{self, GeneratorFile};
use revhyp::semigroup::Semigroup;
use revhyp::{Error, Result};
use serde::Serialize;
use serde_json::json;

use crate::util::{need, num, params, to_value};
use crate::{Ctx, Outcome};

#[derive(Debug, Subcommand)]
pub enum ChainsCmd {
    /// Build the explicit generator and write it with `--out`.
    Build(BuildArgs),
    /// Simulate one continuous-time trajectory.
    Sample(SampleArgs),
    /// Literature bounds on the log-Sobolev constant.
    Bounds(ChainArgs),
    /// Detailed-balance residual of Glauber dynamics.
    Balance(ChainArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    Simple,
    ProductWalk,
    RandomTransposition,
    TopToRandom,
    BernoulliLaplace,
    SpanningTreeWalk,
    GlauberIsing,
    #[value(alias = "qq-infinity-truncated")]
    QqInfinity,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryArg {
    Free,
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatesArg {
    Metropolis,
    HeatBath,
}

#[derive(Debug, Args, Serialize)]
pub struct ChainArgs {
    #[arg(value_enum)]
    kind: ChainKind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    /// Factor size of the product walk.
    #[arg(long)]
    m: Option<usize>,
    /// Weights of the simple chain or of the product-walk factor.
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long)]
    vertices: Option<usize>,
    /// Graph edges as `u-v` pairs, comma separated.
    #[arg(long, value_delimiter = ',')]
    edges: Option<Vec<String>>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// External field of the Ising model.
    #[arg(long = "h", allow_negative_numbers = true)]
    #[serde(rename = "h")]
    field: Option<f64>,
    #[arg(long, value_enum, default_value = "free")]
    boundary: BoundaryArg,
    #[arg(long, value_enum, default_value = "heat-bath")]
    rates: RatesArg,
    #[arg(long)]
    lambda: Option<f64>,
    /// Queue truncation level.
    #[arg(long)]
    trunc: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct BuildArgs {
    #[command(flatten)]
    #[serde(flatten)]
    chain: ChainArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    chain: ChainArgs,
    /// Time horizon.
    #[arg(long)]
    t: Option<f64>,
    /// Recorded state changes at most.
    #[arg(long, default_value_t = 100)]
    record: usize,
}

fn parse_edge(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parameter(format!("edge must look like u-v, got {s:?}"));
    let (a, b) = s.trim().split_once('-').ok_or_else(bad)?;
    Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
}

impl ChainArgs {
    pub fn spec(&self) -> Result<ChainSpec> {
        Ok(match self.kind {
            ChainKind::Simple => ChainSpec::Simple {
                mu: need(&self.mu, "mu")?.clone(),
            },
            ChainKind::ProductWalk => ChainSpec::ProductWalk {
                m: *need(&self.m, "m")?,
                n: *need(&self.n, "n")?,
                mu: self.mu.clone(),
            },
            ChainKind::RandomTransposition => ChainSpec::RandomTransposition {
                n: *need(&self.n, "n")?,
            },
            ChainKind::TopToRandom => ChainSpec::TopToRandom {
                n: *need(&self.n, "n")?,
            },
            ChainKind::BernoulliLaplace => ChainSpec::BernoulliLaplace {
                n: *need(&self.n, "n")?,
                r: *need(&self.r, "r")?,
            },
            ChainKind::SpanningTreeWalk => ChainSpec::SpanningTreeWalk {
                vertices: *need(&self.vertices, "vertices")?,
                edges: need(&self.edges, "edges")?
                    .iter()
                    .map(|e| parse_edge(e))
                    .collect::<Result<_>>()?,
            },
            ChainKind::GlauberIsing => ChainSpec::GlauberIsing {
                width: *need(&self.width, "width")?,
                height: *need(&self.height, "height")?,
                beta: *need(&self.beta, "beta")?,
                h: self.field.unwrap_or(0.0),
                boundary: match self.boundary {
                    BoundaryArg::Free => Boundary::Free,
                    BoundaryArg::Plus => Boundary::Plus,
                    BoundaryArg::Minus => Boundary::Minus,
                },
                rates: match self.rates {
                    RatesArg::Metropolis => RateFamily::Metropolis,
                    RatesArg::HeatBath => RateFamily::HeatBath,
                },
            },
            ChainKind::QqInfinity => ChainSpec::QqInfinityTruncated {
                lambda: *need(&self.lambda, "lambda")?,
                truncation: *need(&self.trunc, "trunc")?,
            },
        })
    }
}

pub fn run(cmd: ChainsCmd, ctx: &Ctx) -> Result<Outcome> {
    match cmd {
        ChainsCmd::Build(a) => {
            let spec = a.chain.spec()?;
            let g = chains::build(&spec)?;
            let gap = g.spectral_gap()?;
            // `--out` receives the generator file; the report goes to stdout.
            let file = io::to_json(&GeneratorFile::from_generator(&g))?;
            Ok(Outcome::new(
                "chains build",
                params(&a),
                json!({
                    "spec": spec,
                    "states": g.len(),
                    "spectral_gap": num(gap.value),
                    "reducible": gap.reducible,
                    "known_bounds": chains::known_constant_bounds(&spec).map(|b| to_value(&b)),
                }),
            )
            .artifact(file))
        }
        ChainsCmd::Sample(a) => {
            let spec = a.chain.spec()?;
            let t = *need(&a.t, "t")?;
            if !t.is_finite() || t < 0.0 {
                return Err(Error::Domain(format!(
                    "time must be finite and nonnegative, got {t}"
                )));
            }
            let sampler = TrajectorySampler::new(spec.clone(), ctx.seed)?;
            let total = |s: &[i32]| s.iter().map(|v| *v as f64).sum::<f64>();
            let path = sampler.sample_path(t, &total, a.record, 0);
            Ok(Outcome::new(
                "chains sample",
                params(&a),
                json!({
                    "spec": spec,
                    "observable": "sum of state coordinates",
                    "path": path,
                }),
            ))
        }
        ChainsCmd::Bounds(a) => {
            let spec = a.spec()?;
            Ok(Outcome::new(
                "chains bounds",
                params(&a),
                json!({ "spec": spec, "known_bounds": chains::known_constant_bounds(&spec) }),
            ))
        }
        ChainsCmd::Balance(a) => {
            let spec = a.spec()?;
            let r = chains::glauber_detailed_balance(&spec)?;
            Ok(Outcome::new(
                "chains balance",
                params(&a),
                json!({ "spec": spec, "max_residual": num(r) }),
            ))
        }
    }
}
