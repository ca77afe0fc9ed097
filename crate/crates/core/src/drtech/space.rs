//! Hyperparameter domains and assignments.
//!
//! Searches operate in the unit cube: each dimension maps linearly (or
//! log-linearly for `log-real`) onto its bounds, integers round to nearest.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamKind {
    Integer,
    Real,
    LogReal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDim {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: ParamKind,
    pub lower: f64,
    pub upper: f64,
}

impl ParamDim {
    pub fn new(name: &str, kind: ParamKind, lower: f64, upper: f64) -> Self {
        Self {
            name: name.to_string(),
            kind,
            lower,
            upper,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(Error::validation(format!(
                "parameter '{}' needs finite lower < upper, got [{}, {}]",
                self.name, self.lower, self.upper
            )));
        }
        match self.kind {
            ParamKind::Integer if self.lower.fract() != 0.0 || self.upper.fract() != 0.0 => {
                Err(Error::validation(format!(
                    "integer parameter '{}' has non-integral bounds",
                    self.name
                )))
            }
            ParamKind::LogReal if self.lower <= 0.0 => Err(Error::validation(format!(
                "log-real parameter '{}' needs a positive lower bound",
                self.name
            ))),
            _ => Ok(()),
        }
    }

    fn from_unit(&self, u: f64) -> ParamValue {
        let u = u.clamp(0.0, 1.0);
        match self.kind {
            ParamKind::Integer => {
                let v = (self.lower + u * (self.upper - self.lower)).round();
                ParamValue::Int(v.clamp(self.lower, self.upper) as i64)
            }
            ParamKind::Real => ParamValue::Real(self.lower + u * (self.upper - self.lower)),
            ParamKind::LogReal => {
                let (a, b) = (self.lower.ln(), self.upper.ln());
                ParamValue::Real((a + u * (b - a)).exp().clamp(self.lower, self.upper))
            }
        }
    }

    fn to_unit(&self, v: f64) -> f64 {
        match self.kind {
            ParamKind::Integer | ParamKind::Real => (v - self.lower) / (self.upper - self.lower),
            ParamKind::LogReal => (v.ln() - self.lower.ln()) / (self.upper.ln() - self.lower.ln()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
}

impl ParamValue {
    pub fn as_f64(self) -> f64 {
        match self {
            ParamValue::Int(v) => v as f64,
            ParamValue::Real(v) => v,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperparamAssignment(pub BTreeMap<String, ParamValue>);

impl HyperparamAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: ParamValue) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<ParamValue> {
        self.0.get(name).copied()
    }

    pub fn real(&self, name: &str) -> Result<f64> {
        self.get(name)
            .map(ParamValue::as_f64)
            .ok_or_else(|| Error::validation(format!("missing hyperparameter '{name}'")))
    }

    pub fn int(&self, name: &str) -> Result<i64> {
        match self.get(name) {
            Some(ParamValue::Int(v)) => Ok(v),
            Some(ParamValue::Real(v)) if v.fract() == 0.0 => Ok(v as i64),
            Some(other) => Err(Error::validation(format!(
                "hyperparameter '{name}' must be an integer, got {other}"
            ))),
            None => Err(Error::validation(format!("missing hyperparameter '{name}'"))),
        }
    }

    /// Stable textual key, used to cache objective evaluations.
    pub fn key(&self) -> String {
        self.0
            .iter()
            .map(|(k, v)| match v {
                ParamValue::Int(i) => format!("{k}={i}"),
                ParamValue::Real(r) => format!("{k}={:016x}", r.to_bits()),
            })
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// `name=value` pairs joined by `;`, in name order.
impl fmt::Display for HyperparamAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperparamSpace {
    dims: Vec<ParamDim>,
}

impl HyperparamSpace {
    pub fn new(dims: Vec<ParamDim>) -> Result<Self> {
        for (i, d) in dims.iter().enumerate() {
            d.validate()?;
            if dims[..i].iter().any(|o| o.name == d.name) {
                return Err(Error::validation(format!("duplicate parameter '{}'", d.name)));
            }
        }
        Ok(Self { dims })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn dims(&self) -> &[ParamDim] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn decode(&self, unit: &[f64]) -> HyperparamAssignment {
        HyperparamAssignment(
            self.dims
                .iter()
                .zip(unit)
                .map(|(d, &u)| (d.name.clone(), d.from_unit(u)))
                .collect(),
        )
    }

    /// Position of a (valid) assignment in the unit cube.
    pub fn encode(&self, h: &HyperparamAssignment) -> Result<Vec<f64>> {
        self.dims
            .iter()
            .map(|d| h.real(&d.name).map(|v| d.to_unit(v)))
            .collect()
    }

    /// Uniform draw; log-uniform on `log-real` dimensions.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HyperparamAssignment {
        let unit: Vec<f64> = (0..self.dims.len()).map(|_| rng.random::<f64>()).collect();
        self.decode(&unit)
    }

    pub fn validate(&self, h: &HyperparamAssignment) -> Result<()> {
        for d in &self.dims {
            let v = match d.kind {
                ParamKind::Integer => h.int(&d.name)? as f64,
                _ => h.real(&d.name)?,
            };
            if !(v >= d.lower && v <= d.upper) {
                return Err(Error::validation(format!(
                    "hyperparameter '{}' = {v} outside [{}, {}]",
                    d.name, d.lower, d.upper
                )));
            }
        }
        if let Some(extra) = h.0.keys().find(|k| !self.dims.iter().any(|d| &d.name == *k)) {
            return Err(Error::validation(format!("unknown hyperparameter '{extra}'")));
        }
        Ok(())
    }

    /// Fill unassigned dimensions from `defaults`, clamped into bounds.
    pub fn complete(&self, partial: &HyperparamAssignment, defaults: &HyperparamAssignment) -> HyperparamAssignment {
        let mut out = partial.clone();
        for d in &self.dims {
            if out.get(&d.name).is_none() {
                let v = defaults
                    .get(&d.name)
                    .map(ParamValue::as_f64)
                    .unwrap_or((d.lower + d.upper) / 2.0)
                    .clamp(d.lower, d.upper);
                let value = match d.kind {
                    ParamKind::Integer => ParamValue::Int(v.round() as i64),
                    _ => ParamValue::Real(v),
                };
                out.0.insert(d.name.clone(), value);
            }
        }
        out
    }
}
