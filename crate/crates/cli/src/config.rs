//! `--config FILE` support: a flat TOML table of flag defaults.
//!
//! Each `key = value` becomes `--key value` appended to argv unless `--key`
//! is already present. `true` becomes a bare flag, `false` is dropped, and
//! arrays are joined with commas.

use std::fs;

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn scalar(v: &toml::Value) -> Result<String, String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(revhyp::io::format_float(*f)),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        other => Err(format!("unsupported config value {other}")),
    }
}

pub fn merge(mut argv: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| format!("invalid config {path}: {e}"))?;
    for (key, value) in table {
        if key == "config" {
            return Err("a config file cannot name another config file".into());
        }
        let flag = format!("--{key}");
        let present = argv
            .iter()
            .any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if present {
            continue;
        }
        match &value {
            toml::Value::Boolean(true) => argv.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
                argv.push(flag);
                argv.push(parts.join(","));
            }
            v => {
                argv.push(flag);
                argv.push(scalar(v)?);
            }
        }
    }
    Ok(argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_flags_win() {
        let dir = std::env::temp_dir().join(format!("revhyp-cfg-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("c.toml");
        fs::write(
            &p,
            "p = 0.9\nq = -1\ngrid = [0, 0.5, 1]\nexpect-holds = true\n",
        )
        .unwrap();
        let argv: Vec<String> = ["revhyp", "hyper", "threshold", "--p", "0.5", "--config"]
            .iter()
            .map(|s| s.to_string())
            .chain([p.display().to_string()])
            .collect();
        let out = merge(argv).unwrap();
        let tail = out[7..].join(" ");
        assert!(tail.contains("--q -1"));
        assert!(tail.contains("--grid 0,0.5,1"));
        assert!(tail.contains("--expect-holds"));
        assert!(!tail.contains("--p"));
    }
}
