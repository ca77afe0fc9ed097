//! `--config file.json` support: the file's keys become long flags inserted
//! right after the subcommand, so flags given on the command line win.

use std::ffi::OsString;

use serde_json::Value;

fn flag_args(key: &str, value: &Value, out: &mut Vec<OsString>) -> Result<(), String> {
    let flag = format!("--{}", key.replace('_', "-"));
    match value {
        Value::Bool(true) => out.push(flag.into()),
        Value::Bool(false) | Value::Null => {}
        Value::Number(n) => {
            out.push(flag.into());
            out.push(n.to_string().into());
        }
        Value::String(s) => {
            out.push(flag.into());
            out.push(s.into());
        }
        Value::Array(items) => {
            let parts: Vec<String> = items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.clone()),
                    Value::Number(n) => Ok(n.to_string()),
                    _ => Err(format!("config key '{key}': arrays may hold only strings or numbers")),
                })
                .collect::<Result<_, _>>()?;
            out.push(flag.into());
            out.push(parts.join(",").into());
        }
        Value::Object(map) => {
            // hyperparameter maps and similar pass through as JSON text
            out.push(flag.into());
            out.push(Value::Object(map.clone()).to_string().into());
        }
    }
    Ok(())
}

/// Returns argv with the config file's flags spliced in after the subcommand.
pub fn expand(argv: Vec<OsString>, subcommands: &[&str]) -> Result<Vec<OsString>, String> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy().into_owned();
        if s == "--config" {
            path = Some(it.next().ok_or("--config needs a path")?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let json: Value =
        serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.to_string_lossy()))?;
    let Value::Object(map) = json else {
        return Err("config file must hold a JSON object".into());
    };
    let mut extra = Vec::new();
    for (k, v) in &map {
        flag_args(k, v, &mut extra)?;
    }
    let at = rest
        .iter()
        .position(|a| subcommands.contains(&a.to_string_lossy().as_ref()))
        .map_or(rest.len(), |i| i + 1);
    rest.splice(at..at, extra);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splices_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"budget": 12, "techniques": ["pca", "lle"], "timings": true}"#).unwrap();
        let argv: Vec<OsString> = ["dradapt", "--config", cfg.to_str().unwrap(), "optimize", "x.csv", "--budget", "3"]
            .iter()
            .map(OsString::from)
            .collect();
        let out = expand(argv, &["optimize"]).unwrap();
        let out: Vec<String> = out.iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert_eq!(
            out,
            [
                "dradapt",
                "optimize",
                "--budget",
                "12",
                "--techniques",
                "pca,lle",
                "--timings",
                "x.csv",
                "--budget",
                "3"
            ]
        );
    }
}
