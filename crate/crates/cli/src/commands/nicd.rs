use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use revhyp::io;
use revhyp::nicd::{
    agreement_exact, agreement_mc, calibrate_envelope, check_balance, holder_bound, monotone_in_n,
    plurality_lower_sweep, power_bound_check, upper_bound_envelope, Agreement, NicdConfig,
    Protocol,
};
use revhyp::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::util::{csv_table, f, need, num, params, to_value};
use crate::{Ctx, Outcome};

/// Player count at which the envelope constant is calibrated.
const CALIBRATION_K: usize = 2;

#[derive(Debug, Subcommand)]
pub enum NicdCmd {
    /// Monte Carlo agreement for one or more player counts.
    Simulate(SimulateArgs),
    /// Exact agreement and the Hölder upper bound on small cubes.
    Exact(ExactArgs),
    /// Noise moments of a face indicator against the power envelope.
    Power(PowerArgs),
    /// Plurality agreement over player counts with a log-log slope.
    Sweep(SweepArgs),
    /// Plurality agreement at fixed k for increasing string lengths.
    Monotone(MonotoneArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    Plurality,
    Dictator,
}

#[derive(Debug, Args, Serialize)]
pub struct ProtocolArgs {
    #[arg(long, value_enum, default_value = "plurality")]
    protocol: ProtocolKind,
    /// Dictator coordinate, counted from 1.
    #[arg(long, default_value_t = 1)]
    coordinate: usize,
    /// JSON protocol, or list of one protocol per player; overrides `--protocol`.
    #[arg(long)]
    protocol_file: Option<PathBuf>,
}

impl ProtocolArgs {
    fn protocols(&self) -> Result<Vec<Protocol>> {
        if let Some(path) = &self.protocol_file {
            let v: Value = io::read_json(path)?;
            let parsed = if v.is_array() {
                serde_json::from_value::<Vec<Protocol>>(v)
            } else {
                serde_json::from_value::<Protocol>(v).map(|p| vec![p])
            };
            return parsed.map_err(|e| Error::Parse(e.to_string()));
        }
        Ok(vec![match self.protocol {
            ProtocolKind::Plurality => Protocol::Plurality,
            ProtocolKind::Dictator => {
                if self.coordinate == 0 {
                    return Err(Error::Domain("--coordinate counts from 1".into()));
                }
                Protocol::DictatorCoordinate {
                    coordinate: self.coordinate - 1,
                }
            }
        }])
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Faces per die.
    #[arg(long)]
    m: Option<usize>,
    /// String length.
    #[arg(long)]
    n: Option<usize>,
    /// Player counts; comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long)]
    rho: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    protocol: ProtocolArgs,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ExactArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    protocol: ProtocolArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct PowerArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    /// Moments to compare; comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [2u32, 3, 4, 8, 16, 32, 64])]
    ks: Vec<u32>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8, 16, 32, 64])]
    ks: Vec<usize>,
    #[arg(long, default_value_t = 20_000)]
    trials: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct MonotoneArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    #[arg(long, default_value_t = 20_000)]
    trials: u64,
}

fn agreement_json(a: &Agreement) -> Value {
    json!({
        "estimate": num(a.estimate),
        "ci_lo": num(a.ci_lo),
        "ci_hi": num(a.ci_hi),
        "exact": a.exact,
        "hits": a.hits,
        "trials": a.trials,
    })
}

fn balanced(protocols: &[Protocol], m: usize, n: usize) -> Result<()> {
    for p in protocols {
        p.check(m, n)?;
        if let Protocol::Table { .. } = p {
            check_balance(p, m, n)?;
        }
    }
    Ok(())
}

pub fn run(cmd: NicdCmd, ctx: &Ctx) -> Result<Outcome> {
    match cmd {
        NicdCmd::Simulate(a) => {
            let (m, n, rho) = (*need(&a.m, "m")?, *need(&a.n, "n")?, *need(&a.rho, "rho")?);
            let ks = need(&a.k, "k")?;
            let protocols = a.protocol.protocols()?;
            balanced(&protocols, m, n)?;
            let estimate = |k: usize| -> Result<Agreement> {
                let cfg = NicdConfig {
                    m,
                    n,
                    k,
                    rho,
                    trials: a.trials,
                    seed: ctx.seed,
                };
                cfg.validate()?;
                agreement_mc(&cfg, &protocols)
            };
            let results: Vec<(usize, Agreement)> = ks
                .iter()
                .map(|&k| Ok((k, estimate(k)?)))
                .collect::<Result<_>>()?;
            // the envelope needs ρ > 0 and a single protocol shared by all players
            let envelope = if rho > 0.0 && protocols.len() == 1 {
                let at_two = match results.iter().find(|(k, _)| *k == CALIBRATION_K) {
                    Some((_, r)) => r.estimate,
                    None => estimate(CALIBRATION_K)?.estimate,
                };
                let c = calibrate_envelope(m, rho, CALIBRATION_K as f64, at_two)?;
                Some(c)
            } else {
                None
            };
            let env_at = |k: usize| -> Result<f64> {
                match envelope {
                    Some(c) => upper_bound_envelope(m, rho, k as f64, c),
                    None => Ok(f64::NAN),
                }
            };
            let mut rows = Vec::new();
            let mut lines = Vec::new();
            for (k, r) in &results {
                let e = env_at(*k)?;
                lines.push(vec![
                    k.to_string(),
                    f(r.estimate),
                    f(r.ci_lo),
                    f(r.ci_hi),
                    f(e),
                ]);
                let mut row = agreement_json(r);
                row["k"] = json!(k);
                row["envelope"] = num(e);
                rows.push(row);
            }
            let csv = csv_table(&["k", "estimate", "ci_lo", "ci_hi", "envelope"], lines);
            Ok(Outcome::new(
                "nicd simulate",
                params(&a),
                json!({ "rows": rows, "envelope_c": envelope.map(num) }),
            )
            .csv(csv))
        }
        NicdCmd::Exact(a) => {
            let cfg = NicdConfig {
                m: *need(&a.m, "m")?,
                n: *need(&a.n, "n")?,
                k: *need(&a.k, "k")?,
                rho: *need(&a.rho, "rho")?,
                trials: 0,
                seed: ctx.seed,
            };
            let protocols = a.protocol.protocols()?;
            balanced(&protocols, cfg.m, cfg.n)?;
            let exact = agreement_exact(&cfg, &protocols)?;
            let bound = holder_bound(&cfg, &protocols)?;
            let holds = exact <= bound * (1.0 + 1e-12);
            Ok(Outcome::new(
                "nicd exact",
                params(&a),
                json!({ "agreement": num(exact), "holder_bound": num(bound), "holds": holds }),
            )
            .holds(holds))
        }
        NicdCmd::Power(a) => {
            let (m, n, rho) = (*need(&a.m, "m")?, *need(&a.n, "n")?, *need(&a.rho, "rho")?);
            let cfg = NicdConfig {
                m,
                n,
                k: 2,
                rho,
                trials: 0,
                seed: 0,
            };
            cfg.validate()?;
            let size = cfg.cube_size().ok_or_else(|| {
                Error::Parameter("m^n is too large for the exact noise moments".into())
            })?;
            // indicator of the first coordinate showing face 0, most significant first
            let block = size / m;
            let indicator: Vec<f64> = (0..size).map(|x| (x < block) as u8 as f64).collect();
            let pb = power_bound_check(&indicator, m, n, rho, &a.ks)?;
            let rows: Vec<Value> = pb
                .rows
                .iter()
                .map(|r| json!({ "k": r.k, "lhs": num(r.lhs), "envelope": num(r.envelope) }))
                .collect();
            Ok(Outcome::new(
                "nicd power",
                params(&a),
                json!({
                    "beta": num(pb.beta),
                    "c": num(pb.c),
                    "rows": rows,
                    "dominated_from": pb.dominated_from,
                }),
            ))
        }
        NicdCmd::Sweep(a) => {
            let s = plurality_lower_sweep(
                *need(&a.m, "m")?,
                *need(&a.rho, "rho")?,
                &a.ks,
                *need(&a.n, "n")?,
                a.trials,
                ctx.seed,
            )?;
            let csv = csv_table(
                &["k", "estimate", "ci_lo", "ci_hi"],
                s.rows
                    .iter()
                    .map(|r| vec![r.k.to_string(), f(r.estimate), f(r.ci_lo), f(r.ci_hi)]),
            );
            Ok(Outcome::new(
                "nicd sweep",
                params(&a),
                json!({ "rows": to_value(&s.rows), "slope": s.slope.map(num) }),
            )
            .csv(csv))
        }
        NicdCmd::Monotone(a) => {
            let r = monotone_in_n(
                *need(&a.m, "m")?,
                *need(&a.rho, "rho")?,
                *need(&a.k, "k")?,
                need(&a.ns, "ns")?,
                a.trials,
                ctx.seed,
            )?;
            Ok(Outcome::new(
                "nicd monotone",
                params(&a),
                json!({ "rows": to_value(&r.rows), "consistent": r.consistent }),
            )
            .holds(r.consistent))
        }
    }
}
