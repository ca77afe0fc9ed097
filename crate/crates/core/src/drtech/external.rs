//! External projection techniques run as subprocesses.
//!
//! Protocol: the command is invoked as `<cmd> --input <csv> --output <csv>`.
//! The input CSV holds the dataset (no header, no labels). A single JSON
//! object with the hyperparameters is written to stdin. The command must
//! write exactly N rows of 2 comma-separated values, no header, to the
//! output path. The run seed is exported as `DRADAPT_SEED`.

use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::data::{write_dataset_to, Dataset};
use crate::error::{Error, Result};

use super::space::{HyperparamAssignment, HyperparamSpace};
use super::Projection;

/// Registration record for an external technique, as read from a plugin file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalTechnique {
    pub id: String,
    /// Program followed by fixed leading arguments.
    pub command: Vec<String>,
    #[serde(default)]
    pub space: HyperparamSpace,
}

impl ExternalTechnique {
    fn fail(&self, exit_code: Option<i32>, message: impl Into<String>) -> Error {
        Error::ExternalTechnique {
            technique: self.id.clone(),
            exit_code,
            message: message.into(),
        }
    }
}

fn tail(text: &[u8]) -> String {
    let s = String::from_utf8_lossy(text);
    let s = s.trim();
    let start = s.char_indices().rev().nth(1999).map_or(0, |(i, _)| i);
    s[start..].to_string()
}

pub fn run_external(
    tech: &ExternalTechnique,
    ds: &Dataset,
    h: &HyperparamAssignment,
    seed: u64,
) -> Result<Projection> {
    let (program, args) = tech
        .command
        .split_first()
        .ok_or_else(|| tech.fail(None, "no command configured"))?;
    let dir = tempfile::tempdir()?;
    let input = dir.path().join("input.csv");
    let output = dir.path().join("output.csv");
    {
        let file = std::fs::File::create(&input)?;
        let unlabeled = Dataset::new(ds.name(), ds.points().to_vec(), ds.n(), ds.d(), None)?;
        write_dataset_to(&unlabeled, std::io::BufWriter::new(file))?;
    }

    let mut child = Command::new(program)
        .args(args)
        .arg("--input")
        .arg(&input)
        .arg("--output")
        .arg(&output)
        .env("DRADAPT_SEED", seed.to_string())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| tech.fail(None, format!("failed to spawn '{program}': {e}")))?;

    let payload = serde_json::to_vec(h)?;
    if let Some(mut stdin) = child.stdin.take() {
        match stdin.write_all(&payload) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            other => other?,
        }
    }
    let out = child.wait_with_output()?;
    if !out.status.success() {
        let code = out.status.code();
        return Err(tech.fail(
            code,
            format!(
                "exited with {}; stderr: {}",
                code.map_or_else(|| "signal".to_string(), |c| format!("code {c}")),
                tail(&out.stderr)
            ),
        ));
    }

    let text = std::fs::read_to_string(&output)
        .map_err(|e| tech.fail(Some(0), format!("cannot read output {}: {e}", output.display())))?;
    let mut points = Vec::with_capacity(ds.n());
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 2 {
            return Err(tech.fail(
                Some(0),
                format!("output line {} has {} columns, expected 2", line_no + 1, cells.len()),
            ));
        }
        let mut p = [0.0; 2];
        for (slot, cell) in p.iter_mut().zip(&cells) {
            *slot = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| tech.fail(Some(0), format!("output line {}: bad value '{cell}'", line_no + 1)))?;
        }
        points.push(p);
    }
    if points.len() != ds.n() {
        return Err(tech.fail(
            Some(0),
            format!("output has {} rows, expected {}", points.len(), ds.n()),
        ));
    }
    Projection::new(points)
}
