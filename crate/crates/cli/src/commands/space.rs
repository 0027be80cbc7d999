use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use revhyp::io;
use revhyp::measure::{entropy, holder_conjugate, p_norm, variance};
use revhyp::Result;
use serde::Serialize;
use serde_json::json;

use crate::util::{need_path, num, params};
use crate::{Ctx, Outcome};

#[derive(Debug, Subcommand)]
pub enum SpaceCmd {
    /// Validate a space file and echo its normalized measure.
    Check(CheckArgs),
    /// Norms, entropy and variance of a function.
    Norm(NormArgs),
    /// Re-emit a space, generator or kernel file in canonical form.
    Canonical(CanonicalArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CheckArgs {
    #[arg(long)]
    space: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct NormArgs {
    #[arg(long)]
    space: Option<PathBuf>,
    /// JSON `{labels, values}` or CSV `label,value`.
    #[arg(long = "fn")]
    #[serde(rename = "fn")]
    function: Option<PathBuf>,
    /// Exponents; comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [2.0])]
    p: Vec<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FileKind {
    Space,
    Generator,
    Kernel,
}

#[derive(Debug, Args, Serialize)]
pub struct CanonicalArgs {
    #[arg(long, value_enum)]
    kind: FileKind,
    #[arg(long)]
    file: Option<PathBuf>,
}

pub fn run(cmd: SpaceCmd, _ctx: &Ctx) -> Result<Outcome> {
    match cmd {
        SpaceCmd::Check(a) => {
            let s = io::read_space(need_path(&a.space, "space")?)?;
            Ok(Outcome::new(
                "space check",
                params(&a),
                json!({
                    "n": s.len(),
                    "labels": s.labels(),
                    "mu": s.mu(),
                    "min_mass": s.mu().iter().cloned().fold(f64::INFINITY, f64::min),
                }),
            ))
        }
        SpaceCmd::Norm(a) => {
            let s = io::read_space(need_path(&a.space, "space")?)?;
            let f = io::read_function(need_path(&a.function, "fn")?, s)?;
            let norms =
                a.p.iter()
                    .map(|&p| {
                        Ok(json!({
                            "p": num(p),
                            "conjugate": num(holder_conjugate(p)?),
                            "norm": num(p_norm(&f, p)?),
                        }))
                    })
                    .collect::<Result<Vec<_>>>()?;
            let ent = if f.values().iter().all(|v| *v >= 0.0) {
                num(entropy(&f)?)
            } else {
                serde_json::Value::Null
            };
            Ok(Outcome::new(
                "space norm",
                params(&a),
                json!({
                    "mean": num(f.mean()),
                    "variance": num(variance(&f)),
                    "entropy": ent,
                    "norms": norms,
                }),
            ))
        }
        SpaceCmd::Canonical(a) => {
            let path = need_path(&a.file, "file")?;
            let canonical = match a.kind {
                FileKind::Space => {
                    io::to_json(&io::SpaceFile::from_space(&*io::read_space(path)?))?
                }
                FileKind::Generator => io::to_json(&io::GeneratorFile::from_generator(
                    &io::read_generator(path)?,
                ))?,
                FileKind::Kernel => {
                    io::to_json(&io::KernelFile::from_kernel(&io::read_kernel(path)?))?
                }
            };
            let value: serde_json::Value = io::from_json(&canonical)?;
            Ok(Outcome::new(
                "space canonical",
                params(&a),
                json!({ "document": value }),
            ))
        }
    }
}
