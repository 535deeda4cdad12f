//! Canonical JSON: keys sorted, two-space indentation, floats printed with
//! six significant digits (`%g` style) so output is byte-stable.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::{Error, Result};

/// Six-significant-digit rendering, trailing zeros trimmed.
pub fn format_float(v: f64) -> Result<String> {
    if !v.is_finite() {
        return Err(Error::param(format!("cannot serialize non-finite number {v}")));
    }
    if v == 0.0 {
        return Ok("0".into());
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        Ok(trim_zeros(&format!("{v:.decimals$}")))
    } else {
        Ok(format!("{}e{exp}", trim_zeros(mantissa)))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    emit(&v, 0, &mut out)?;
    out.push('\n');
    Ok(out)
}

fn emit(v: &Value, indent: usize, out: &mut String) -> Result<()> {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                out.push_str(&format_float(n.as_f64().expect("finite json number"))?);
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s)?),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return Ok(());
            }
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                out.push_str(if k == 0 { "\n" } else { ",\n" });
                pad(indent + 1, out);
                emit(item, indent + 1, out)?;
            }
            out.push('\n');
            pad(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return Ok(());
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (k, key) in keys.into_iter().enumerate() {
                out.push_str(if k == 0 { "\n" } else { ",\n" });
                pad(indent + 1, out);
                out.push_str(&serde_json::to_string(key)?);
                out.push_str(": ");
                emit(&map[key], indent + 1, out)?;
            }
            out.push('\n');
            pad(indent, out);
            out.push('}');
        }
    }
    Ok(())
}

fn pad(level: usize, out: &mut String) {
    out.extend(std::iter::repeat_n("  ", level));
}

pub fn write_report<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_canonical_json(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// CSV with a header row; the header fixes the column order.
pub fn write_csv(path: impl AsRef<Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::param(format!("csv row has {} fields, header has {}", row.len(), header.len())));
        }
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[test]
    fn float_formatting() {
        let cases = [
            (0.6, "0.6"),
            (1.0, "1"),
            (0.0, "0"),
            (-0.0, "0"),
            (2.0 / 3.0, "0.666667"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e6"),
            (0.0001234567, "0.000123457"),
            (0.00001234567, "1.23457e-5"),
            (-3.5, "-3.5"),
        ];
        for (v, s) in cases {
            assert_eq!(format_float(v).unwrap(), s, "{v}");
        }
        assert!(format_float(f64::NAN).is_err());
    }

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Sample {
        zeta: f64,
        alpha: u32,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        maybe: Option<f64>,
        list: Vec<Option<f64>>,
    }

    #[test]
    fn keys_are_sorted_and_output_is_stable() {
        let s = Sample { zeta: 0.25, alpha: 3, maybe: None, list: vec![Some(1.0), None] };
        let a = to_canonical_json(&s).unwrap();
        assert_eq!(a, to_canonical_json(&s).unwrap());
        assert_eq!(a, "{\n  \"alpha\": 3,\n  \"list\": [\n    1,\n    null\n  ],\n  \"zeta\": 0.25\n}\n");
        let back: Sample = serde_json::from_str(&a).unwrap();
        assert_eq!(back, s);
    }
}
