//! File formats for spaces, generators, kernels, functions, sets and voting laws.
//!
//! Floats are written with the shortest representation that parses back to
//! the same bits, so files round-trip exactly.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{ProbabilitySpace, RealFunction};
use crate::semigroup::{validate_generator, Generator, MarkovKernel, Semigroup};
use crate::social_choice::{CubeFunction, RankingDistribution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub labels: Vec<String>,
    pub mu: Vec<f64>,
}

impl SpaceFile {
    pub fn from_space(s: &ProbabilitySpace) -> Self {
        Self {
            labels: s.labels().to_vec(),
            mu: s.mu().to_vec(),
        }
    }

    pub fn build(self) -> Result<Arc<ProbabilitySpace>> {
        ProbabilitySpace::new(self.labels, self.mu).map(Arc::new)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorFile {
    pub space: SpaceFile,
    #[serde(rename = "L")]
    pub l: Vec<Vec<f64>>,
}

impl GeneratorFile {
    pub fn from_generator(g: &Generator) -> Self {
        let d = g.to_dense();
        Self {
            space: SpaceFile::from_space(g.space()),
            l: rows(&d),
        }
    }

    pub fn build(self) -> Result<Generator> {
        let space = self.space.build()?;
        validate_generator(&square(&self.l, space.len())?, space)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFile {
    pub space: SpaceFile,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
}

impl KernelFile {
    pub fn from_kernel(k: &MarkovKernel) -> Self {
        Self {
            space: SpaceFile::from_space(k.space()),
            k: rows(k.matrix()),
        }
    }

    pub fn build(self) -> Result<MarkovKernel> {
        let space = self.space.build()?;
        MarkovKernel::new(space.clone(), square(&self.k, space.len())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionFile {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeFunctionFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
    /// Bit `i` of the index is coordinate `i + 1`; a set bit means `+1`.
    pub table: Vec<f64>,
}

impl CubeFunctionFile {
    pub fn build(self, bias: Option<f64>) -> Result<CubeFunction> {
        CubeFunction::new(self.n, bias.or(self.bias).unwrap_or(0.5), self.table)
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn square(r: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if r.len() != n || r.iter().any(|row| row.len() != n) {
        return Err(Error::Parse(format!("matrix must be {n}x{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| r[i][j]))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json(&read_text(path)?).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        e => e,
    })
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    std::fs::write(path, to_json(v)? + "\n").map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

pub fn read_space(path: &Path) -> Result<Arc<ProbabilitySpace>> {
    read_json::<SpaceFile>(path)?.build()
}

pub fn read_generator(path: &Path) -> Result<Generator> {
    read_json::<GeneratorFile>(path)?.build()
}

pub fn read_kernel(path: &Path) -> Result<MarkovKernel> {
    read_json::<KernelFile>(path)?.build()
}

pub fn read_law(path: &Path) -> Result<RankingDistribution> {
    let law: RankingDistribution = read_json(path)?;
    if law.k != 3 {
        return Err(Error::Unsupported(
            "only three alternatives are supported".into(),
        ));
    }
    RankingDistribution::new(law.probs)
}

pub fn read_cube_function(path: &Path, bias: Option<f64>) -> Result<CubeFunction> {
    read_json::<CubeFunctionFile>(path)?.build(bias)
}

/// Matches labelled values to `space`; every point must appear exactly once.
pub fn function_from_pairs(
    space: Arc<ProbabilitySpace>,
    pairs: Vec<(String, f64)>,
) -> Result<RealFunction> {
    let mut values = vec![f64::NAN; space.len()];
    for (label, v) in pairs {
        let i = space
            .index_of(&label)
            .ok_or_else(|| Error::Parse(format!("unknown label {label:?}")))?;
        if !values[i].is_nan() {
            return Err(Error::Parse(format!("label {label:?} given twice")));
        }
        values[i] = v;
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Parse(format!(
            "no value for label {:?}",
            space.labels()[i]
        )));
    }
    RealFunction::new(space, values)
}

/// Reads a function from JSON, or from CSV with header `label,value` when the
/// extension is `.csv`.
pub fn read_function(path: &Path, space: Arc<ProbabilitySpace>) -> Result<RealFunction> {
    let text = read_text(path)?;
    let pairs = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        parse_function_csv(&text)?
    } else {
        let f: FunctionFile = from_json(&text)?;
        if f.labels.len() != f.values.len() {
            return Err(Error::Parse("labels and values differ in length".into()));
        }
        f.labels.into_iter().zip(f.values).collect()
    };
    function_from_pairs(space, pairs)
}

pub fn parse_function_csv(text: &str) -> Result<Vec<(String, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.len() != 2 || &header[0] != "label" || &header[1] != "value" {
        return Err(Error::Parse("CSV header must be `label,value`".into()));
    }
    rdr.deserialize::<(String, f64)>()
        .map(|r| r.map_err(|e| Error::Parse(e.to_string())))
        .collect()
}

pub fn function_to_csv(f: &RealFunction) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    let err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(["label", "value"]).map_err(err)?;
    for (l, v) in f.space().labels().iter().zip(f.values()) {
        w.write_record([l.as_str(), &format_float(*v)])
            .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Shortest round-trip decimal form, as used in JSON output.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        serde_json::Number::from_f64(v)
            .map(|n| n.to_string())
            .unwrap_or_default()
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// A set given as a JSON list of point indices; returned sorted and deduplicated.
pub fn read_set(path: &Path, space: &ProbabilitySpace) -> Result<Vec<usize>> {
    let mut v: Vec<usize> = read_json(path)?;
    v.sort_unstable();
    v.dedup();
    if v.last().is_some_and(|x| *x >= space.len()) {
        return Err(Error::Parse(format!(
            "set index out of range for {} points",
            space.len()
        )));
    }
    Ok(v)
}
