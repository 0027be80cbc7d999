use serde::Serialize;
use thiserror::Error;

/// One failed generator axiom, with the worst offending magnitude.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub magnitude: f64,
    pub location: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    ConstantAnnihilation,
    SelfAdjoint,
    MaximumPrinciple,
    PositiveSemidefinite,
}

impl Axiom {
    pub fn name(self) -> &'static str {
        match self {
            Axiom::ConstantAnnihilation => "constant annihilation (L1 = 0)",
            Axiom::SelfAdjoint => "self-adjointness",
            Axiom::MaximumPrinciple => "maximum principle",
            Axiom::PositiveSemidefinite => "positive semidefinite",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid probability space: {0}")]
    Space(String),
    #[error("generator rejected: {}", describe(.0))]
    Validation(Vec<AxiomViolation>),
    #[error("invalid kernel: {0}")]
    Kernel(String),
    #[error("decomposition impossible: minimal atom alpha is 0")]
    DecompositionImpossible,
    #[error(
        "degenerate decomposition: alpha is 1, the kernel already equals its stationary projection"
    )]
    DegenerateDecomposition,
    #[error("spectral gap is zero; the constant is unbounded")]
    UnboundedConstant,
    #[error("{states} states exceeds the explicit cap of {cap}; use the trajectory sampler")]
    TooLarge { states: usize, cap: usize },
    #[error("unbalanced protocol: {0}")]
    Unbalanced(String),
    #[error("invalid parameters: {0}")]
    Parameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

fn describe(v: &[AxiomViolation]) -> String {
    v.iter()
        .map(|a| {
            format!(
                "{} violated by {:e} at ({}, {})",
                a.axiom.name(),
                a.magnitude,
                a.location.0,
                a.location.1
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// Short machine-readable tag, used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Space(_) => "space",
            Error::Validation(_) => "validation",
            Error::Kernel(_) => "kernel",
            Error::DecompositionImpossible => "decomposition-impossible",
            Error::DegenerateDecomposition => "degenerate-decomposition",
            Error::UnboundedConstant => "unbounded-constant",
            Error::TooLarge { .. } => "sampler-only",
            Error::Unbalanced(_) => "unbalanced",
            Error::Parameter(_) => "parameter",
            Error::Unsupported(_) => "unsupported",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
