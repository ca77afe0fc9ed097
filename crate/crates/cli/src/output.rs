use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use dradapt::report::strip_timings;
use dradapt::{Result, SCHEMA};

use crate::GlobalArgs;

/// Prints `payload` as pretty JSON with a top-level schema tag. Wall-clock
/// fields are removed unless timings were requested.
pub fn emit_json<T: Serialize>(payload: &T, global: &GlobalArgs) -> Result<()> {
    let mut v = serde_json::to_value(payload)?;
    if let Value::Object(map) = &mut v {
        map.insert("schema".into(), Value::String(SCHEMA.into()));
    }
    if !global.timings {
        strip_timings(&mut v);
    }
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &v)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Prints a header and rows as CSV.
pub fn emit_csv(header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|c| csv_field(c)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Serialized name of a unit enum variant.
pub fn enum_str<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}
