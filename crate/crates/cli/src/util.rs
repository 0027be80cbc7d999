use std::path::{Path, PathBuf};

use revhyp::io::format_float;
use revhyp::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

/// Required flag that clap treats as optional, so its absence is a validation error.
pub fn need<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::Parameter(format!("missing required flag --{flag}")))
}

pub fn need_path<'a>(v: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    need(v, flag).map(|p| p.as_path())
}

/// JSON number, or a string for values JSON cannot hold.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::String(format_float(v))
    }
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

pub fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

/// Serializes a result struct; non-finite floats come out as `null`.
pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable result")
}

pub fn params<T: Serialize>(v: &T) -> Value {
    to_value(v)
}

pub fn f(v: f64) -> String {
    format_float(v)
}

pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}
