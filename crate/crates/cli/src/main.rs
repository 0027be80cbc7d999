//! `revhyp` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input (a JSON error object is printed),
//! 3 an inequality came out violated under `--expect-holds`, 64 usage error.

mod commands;
mod config;
mod report;
mod util;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::report::{ErrorReport, Meta, Report};

#[derive(Debug, Parser)]
#[command(
    name = "revhyp",
    version,
    about = "Reversible Markov semigroups, log-Sobolev constants and hypercontractivity"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct Global {
    /// Seed for every random choice; drawn fresh and echoed when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file of `flag = value` defaults; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Exit with status 3 when the checked inequality is violated.
    #[arg(long, global = true)]
    pub expect_holds: bool,
    /// Emit CSV instead of JSON where a command supports it.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Record wall-clock time in the report (makes output run-dependent).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Probability spaces and functions on them.
    #[command(subcommand)]
    Space(commands::space::SpaceCmd),
    /// Example chains: build, sample, literature bounds.
    #[command(subcommand)]
    Chains(commands::chains::ChainsCmd),
    /// p-log-Sobolev evaluation and constant estimation.
    #[command(subcommand)]
    Logsob(commands::logsob::LogsobCmd),
    /// Stroock–Varopoulos comparisons.
    #[command(subcommand)]
    Sv(commands::logsob::SvCmd),
    /// Forward and reverse hypercontractivity.
    #[command(subcommand)]
    Hyper(commands::hyper::HyperCmd),
    /// Two-set mixing bounds.
    #[command(subcommand)]
    Mixing(commands::mixing::MixingCmd),
    /// Correlated products and kernel decompositions.
    #[command(subcommand)]
    Correlated(commands::mixing::CorrelatedCmd),
    /// Influences, paradox probability and pivotal sets.
    #[command(subcommand)]
    Arrow(commands::arrow::ArrowCmd),
    /// Agreement with correlated dice.
    #[command(subcommand)]
    Nicd(commands::nicd::NicdCmd),
}

/// What a command hands back to the dispatcher.
pub struct Outcome {
    pub name: String,
    pub params: serde_json::Value,
    pub results: serde_json::Value,
    /// `Some(false)` when the checked inequality failed.
    pub holds: Option<bool>,
    pub csv: Option<String>,
    /// Document written to `--out` in place of the report, which then goes to stdout.
    pub artifact: Option<String>,
}

impl Outcome {
    pub fn new(name: &str, params: serde_json::Value, results: serde_json::Value) -> Self {
        Self {
            name: name.into(),
            params,
            results,
            holds: None,
            csv: None,
            artifact: None,
        }
    }

    pub fn holds(mut self, h: bool) -> Self {
        self.holds = Some(h);
        self
    }

    pub fn csv(mut self, c: String) -> Self {
        self.csv = Some(c);
        self
    }

    pub fn artifact(mut self, a: String) -> Self {
        self.artifact = Some(a);
        self
    }
}

pub struct Ctx {
    pub seed: u64,
    pub csv: bool,
}

fn run(cmd: Command, ctx: &Ctx) -> revhyp::Result<Outcome> {
    match cmd {
        Command::Space(c) => commands::space::run(c, ctx),
        Command::Chains(c) => commands::chains::run(c, ctx),
        Command::Logsob(c) => commands::logsob::run(c, ctx),
        Command::Sv(c) => commands::logsob::run_sv(c, ctx),
        Command::Hyper(c) => commands::hyper::run(c, ctx),
        Command::Mixing(c) => commands::mixing::run(c, ctx),
        Command::Correlated(c) => commands::mixing::run_correlated(c, ctx),
        Command::Arrow(c) => commands::arrow::run(c, ctx),
        Command::Nicd(c) => commands::nicd::run(c, ctx),
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let argv = match config::merge(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            let text = ErrorReport::new("config", &e).to_json();
            print!("{text}");
            eprintln!("revhyp: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(64),
            };
        }
    };
    let g = cli.global.clone();
    let workers = g
        .jobs
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1);
    // Ignored when a pool already exists (only in tests).
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global();
    let seed = g.seed.unwrap_or_else(rand::random);
    let ctx = Ctx { seed, csv: g.csv };

    match run(cli.command, &ctx) {
        Ok(o) => {
            let text = match (&o.csv, g.csv) {
                (Some(csv), true) => csv.clone(),
                _ => Report {
                    schema_version: report::SCHEMA_VERSION,
                    command: o.name.clone(),
                    params: o.params,
                    seed,
                    results: o.results,
                    meta: Meta {
                        tool_version: env!("CARGO_PKG_VERSION"),
                        runtime_ms: g.timing.then(|| start.elapsed().as_millis() as u64),
                        worker_count: workers,
                    },
                }
                .to_json(),
            };
            let written = match &o.artifact {
                Some(doc) => emit(&text, None).and_then(|_| match &g.out {
                    Some(p) => std::fs::write(p, doc),
                    None => Ok(()),
                }),
                None => emit(&text, g.out.as_ref()),
            };
            if let Err(e) = written {
                eprintln!("revhyp: cannot write output: {e}");
                return ExitCode::from(2);
            }
            if g.expect_holds && o.holds == Some(false) {
                eprintln!("revhyp: {}: inequality violated", o.name);
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let text = ErrorReport::new(e.kind(), &e.to_string()).to_json();
            print!("{text}");
            eprintln!("revhyp: {e}");
            ExitCode::from(2)
        }
    }
}
