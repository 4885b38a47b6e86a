//! File formats: JSON for bases, signals and reports; `index,value` CSV for
//! measurement vectors.

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::Basis;
use crate::signal::Signal;

pub fn read_json(path: &Path) -> Result<Value> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn read_basis(path: &Path) -> Result<Basis> {
    Basis::from_json(&read_json(path)?)
}

/// A signal stored as a JSON array of numbers (real) or `[re, im]` pairs,
/// either bare or under a `"signal"` key.
pub fn read_signal(path: &Path) -> Result<Signal> {
    let value = read_json(path)?;
    let inner = match value.get("signal") {
        Some(s) => s.clone(),
        None => value,
    };
    Ok(serde_json::from_value(inner)?)
}

pub fn measurements_to_csv(values: &[f64]) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

/// Parses `index,value` lines; the header is optional and indices must run
/// `0, 1, 2, ...`.
pub fn measurements_from_csv(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("index")) {
            continue;
        }
        let (i, v) = line.split_once(',').ok_or_else(|| Error::Parse(format!("line {}: expected `index,value`", lineno + 1)))?;
        let i: usize = i.trim().parse().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let v: f64 = v.trim().parse().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        if i != values.len() {
            return Err(Error::Parse(format!("line {}: index {i} out of order", lineno + 1)));
        }
        values.push(v);
    }
    Ok(values)
}

pub fn read_measurements(path: &Path) -> Result<Vec<f64>> {
    measurements_from_csv(&std::fs::read_to_string(path)?)
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

pub fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON values always serialize") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measurement_csv_round_trip() {
        let v = vec![1.5, 0.0, 3.25e-7];
        assert_eq!(measurements_from_csv(&measurements_to_csv(&v)).unwrap(), v);
        assert_eq!(measurements_from_csv("0,1\n1,2\n").unwrap(), vec![1.0, 2.0]);
        assert!(measurements_from_csv("1,1\n").is_err());
        assert!(measurements_from_csv("0;1\n").is_err());
    }
}
