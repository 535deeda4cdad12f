//! JSON config files: every key names a long flag of the invoked command.
//! Values from the file are appended to the argument list unless the same
//! flag was given on the command line, so explicit flags always win.

use std::ffi::OsString;
use std::fs;

use anyhow::{bail, Context, Result};
use serde_json::Value;

/// Returns `args` with the `--config <path>` pair removed and the file's
/// settings appended.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut out = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let text = arg.to_string_lossy();
        if text == "--config" {
            config = Some(it.next().context("--config needs a path")?);
        } else if let Some(path) = text.strip_prefix("--config=") {
            config = Some(path.into());
        } else {
            out.push(arg);
        }
    }
    let Some(path) = config else { return Ok(out) };
    let raw = fs::read_to_string(&path).with_context(|| format!("reading config {}", path.to_string_lossy()))?;
    let value: Value =
        serde_json::from_str(&raw).with_context(|| format!("parsing config {}", path.to_string_lossy()))?;
    let Value::Object(map) = value else { bail!("config file must hold a JSON object") };

    let given: Vec<String> = out
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    for (key, value) in map {
        let flag = key.replace('_', "-");
        if given.contains(&flag) {
            continue;
        }
        match value {
            Value::Bool(true) => out.push(format!("--{flag}").into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                out.push(format!("--{flag}").into());
                for item in items {
                    out.push(scalar(&key, &item)?.into());
                }
            }
            other => {
                out.push(format!("--{flag}").into());
                out.push(scalar(&key, &other)?.into());
            }
        }
    }
    Ok(out)
}

fn scalar(key: &str, v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => bail!("config key {key:?} must hold a string, number, boolean or list of them"),
    }
}
