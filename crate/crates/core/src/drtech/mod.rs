//! Dimensionality reduction techniques and their hyperparameter spaces.
//!
//! Built-ins: `pca`, `mds-classical`, `isomap`, `lle`, `tsne-exact`. Other
//! techniques (UMAP and friends) plug in through [`external`].

pub mod external;
pub mod isomap;
pub mod linear;
pub mod lle;
pub mod space;
pub mod tsne;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

pub use external::{run_external, ExternalTechnique};
pub use space::{HyperparamAssignment, HyperparamSpace, ParamDim, ParamKind, ParamValue};

/// An N×2 embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    points: Vec<[f64; 2]>,
}

impl Projection {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::validation(format!("projection has a non-finite point at row {i}")));
        }
        Ok(Self { points })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        let flat = self.points.iter().flat_map(|p| p.iter().copied()).collect();
        Dataset::new("projection", flat, self.n(), 2, None)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for p in &self.points {
            writeln!(w, "{},{}", p[0], p[1])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Builtin {
    #[serde(rename = "pca")]
    Pca,
    #[serde(rename = "mds-classical")]
    MdsClassical,
    #[serde(rename = "isomap")]
    Isomap,
    #[serde(rename = "lle")]
    Lle,
    #[serde(rename = "tsne-exact")]
    TsneExact,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [
        Builtin::Pca,
        Builtin::MdsClassical,
        Builtin::Isomap,
        Builtin::Lle,
        Builtin::TsneExact,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Builtin::Pca => "pca",
            Builtin::MdsClassical => "mds-classical",
            Builtin::Isomap => "isomap",
            Builtin::Lle => "lle",
            Builtin::TsneExact => "tsne-exact",
        }
    }

    /// Search space for a dataset of `n` points.
    pub fn space(self, n: usize) -> Result<HyperparamSpace> {
        use ParamKind::*;
        let neighbors_upper = (n / 4).min(100) as f64;
        let too_small = |need: usize| {
            Error::validation(format!(
                "{} needs at least {need} points to define its search space, got {n}",
                self.id()
            ))
        };
        let dims = match self {
            Builtin::Pca => vec![],
            Builtin::MdsClassical => vec![ParamDim::new("distance_power", Real, 0.5, 2.0)],
            Builtin::Isomap => {
                if neighbors_upper <= 5.0 {
                    return Err(too_small(24));
                }
                vec![ParamDim::new("n_neighbors", Integer, 5.0, neighbors_upper)]
            }
            Builtin::Lle => {
                if neighbors_upper <= 5.0 {
                    return Err(too_small(24));
                }
                vec![
                    ParamDim::new("n_neighbors", Integer, 5.0, neighbors_upper),
                    ParamDim::new("regularization", LogReal, 1e-4, 1e-1),
                ]
            }
            Builtin::TsneExact => {
                let upper = ((n as f64 - 1.0) / 3.0).min(100.0);
                if upper <= 2.0 {
                    return Err(too_small(8));
                }
                vec![
                    ParamDim::new("perplexity", Real, 2.0, upper),
                    ParamDim::new("learning_rate", LogReal, 10.0, 1000.0),
                    ParamDim::new("n_iter", Integer, 250.0, 1000.0),
                ]
            }
        };
        HyperparamSpace::new(dims)
    }

    /// Conventional defaults, used to fill assignments given only partially.
    pub fn defaults(self) -> HyperparamAssignment {
        let h = HyperparamAssignment::new();
        match self {
            Builtin::Pca => h,
            Builtin::MdsClassical => h.with("distance_power", ParamValue::Real(1.0)),
            Builtin::Isomap => h.with("n_neighbors", ParamValue::Int(10)),
            Builtin::Lle => h
                .with("n_neighbors", ParamValue::Int(10))
                .with("regularization", ParamValue::Real(1e-3)),
            Builtin::TsneExact => h
                .with("perplexity", ParamValue::Real(30.0))
                .with("learning_rate", ParamValue::Real(200.0))
                .with("n_iter", ParamValue::Int(1000)),
        }
    }

    fn run(self, ds: &Dataset, h: &HyperparamAssignment, seed: u64) -> Result<Projection> {
        let count = |name: &str| -> Result<usize> {
            let v = h.int(name)?;
            usize::try_from(v).map_err(|_| Error::validation(format!("{name} must be non-negative")))
        };
        match self {
            Builtin::Pca => linear::pca(ds),
            Builtin::MdsClassical => linear::classical_mds(ds, h.real("distance_power")?),
            Builtin::Isomap => isomap::isomap(ds, count("n_neighbors")?),
            Builtin::Lle => lle::lle(ds, count("n_neighbors")?, h.real("regularization")?),
            Builtin::TsneExact => tsne::tsne(
                ds,
                tsne::TsneParams {
                    perplexity: h.real("perplexity")?,
                    learning_rate: h.real("learning_rate")?,
                    n_iter: count("n_iter")?,
                },
                seed,
            ),
        }
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.id() == s)
            .ok_or_else(|| Error::Lookup {
                kind: "technique",
                id: s.to_string(),
            })
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TechniqueKind {
    Builtin(Builtin),
    External(ExternalTechnique),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TechniqueDescriptor {
    pub id: String,
    pub kind: TechniqueKind,
}

impl TechniqueDescriptor {
    pub fn builtin(b: Builtin) -> Self {
        Self {
            id: b.id().to_string(),
            kind: TechniqueKind::Builtin(b),
        }
    }

    pub fn is_external(&self) -> bool {
        matches!(self.kind, TechniqueKind::External(_))
    }

    /// Hyperparameter space for a dataset of `n` points. External spaces are
    /// fixed at registration.
    pub fn hyperparameter_space(&self, n: usize) -> Result<HyperparamSpace> {
        match &self.kind {
            TechniqueKind::Builtin(b) => b.space(n),
            TechniqueKind::External(e) => Ok(e.space.clone()),
        }
    }

    pub fn defaults(&self) -> HyperparamAssignment {
        match &self.kind {
            TechniqueKind::Builtin(b) => b.defaults(),
            TechniqueKind::External(_) => HyperparamAssignment::new(),
        }
    }
}

/// Projects `ds` with technique `t`. Deterministic in `(t, ds, h, seed)`.
pub fn project(t: &TechniqueDescriptor, ds: &Dataset, h: &HyperparamAssignment, seed: u64) -> Result<Projection> {
    let space = t.hyperparameter_space(ds.n())?;
    space.validate(h)?;
    let proj = match &t.kind {
        TechniqueKind::Builtin(b) => b.run(ds, h, seed)?,
        TechniqueKind::External(e) => run_external(e, ds, h, seed)?,
    };
    if proj.n() != ds.n() {
        return Err(Error::Projection {
            technique: t.id.clone(),
            iteration: 0,
            message: format!("produced {} rows for {} points", proj.n(), ds.n()),
        });
    }
    Ok(proj)
}

/// Built-in techniques plus any registered externals.
#[derive(Debug, Clone, PartialEq)]
pub struct TechniqueRegistry {
    entries: Vec<TechniqueDescriptor>,
}

impl Default for TechniqueRegistry {
    fn default() -> Self {
        Self {
            entries: Builtin::ALL.into_iter().map(TechniqueDescriptor::builtin).collect(),
        }
    }
}

impl TechniqueRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_external(&mut self, ext: ExternalTechnique) -> Result<()> {
        if self.entries.iter().any(|e| e.id == ext.id) {
            return Err(Error::validation(format!("technique id '{}' already registered", ext.id)));
        }
        if ext.command.is_empty() {
            return Err(Error::validation(format!("external technique '{}' has no command", ext.id)));
        }
        self.entries.push(TechniqueDescriptor {
            id: ext.id.clone(),
            kind: TechniqueKind::External(ext),
        });
        Ok(())
    }

    /// Register every entry of a JSON plugin file (an array of
    /// `{id, command, space}` objects).
    pub fn load_plugins(&mut self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        let plugins: Vec<ExternalTechnique> = serde_json::from_str(&text)?;
        for p in plugins {
            HyperparamSpace::new(p.space.dims().to_vec())?;
            self.register_external(p)?;
        }
        Ok(())
    }

    pub fn list(&self) -> &[TechniqueDescriptor] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Result<&TechniqueDescriptor> {
        self.entries.iter().find(|e| e.id == id).ok_or_else(|| Error::Lookup {
            kind: "technique",
            id: id.to_string(),
        })
    }

    pub fn select(&self, ids: &[String]) -> Result<Vec<TechniqueDescriptor>> {
        ids.iter().map(|id| self.get(id).cloned()).collect()
    }
}

/// Descriptors of the built-in techniques.
pub fn list_techniques() -> Vec<TechniqueDescriptor> {
    TechniqueRegistry::new().list().to_vec()
}

/// Search space of a technique id for a dataset of `n` points.
pub fn hyperparameter_space(id: &str, n: usize) -> Result<HyperparamSpace> {
    id.parse::<Builtin>()?.space(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticKind, SyntheticSpec};

    #[test]
    fn registry_contents() {
        let mut reg = TechniqueRegistry::new();
        assert_eq!(reg.list().len(), 5);
        reg.register_external(ExternalTechnique {
            id: "umap".into(),
            command: vec!["umap-plugin".into()],
            space: HyperparamSpace::empty(),
        })
        .unwrap();
        assert_eq!(reg.list().len(), 6);
        assert!(reg.get("umap").unwrap().is_external());
        assert!(matches!(reg.get("nope"), Err(Error::Lookup { .. })));
        let dup = ExternalTechnique {
            id: "pca".into(),
            command: vec!["x".into()],
            space: HyperparamSpace::empty(),
        };
        assert!(reg.register_external(dup).is_err());
    }

    #[test]
    fn declared_spaces() {
        assert!(hyperparameter_space("pca", 300).unwrap().is_empty());
        let t = hyperparameter_space("tsne-exact", 301).unwrap();
        let names: Vec<&str> = t.dims().iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["perplexity", "learning_rate", "n_iter"]);
        assert_eq!((t.dims()[0].lower, t.dims()[0].upper), (2.0, 100.0));
        assert_eq!(t.dims()[1].kind, ParamKind::LogReal);
        assert_eq!((t.dims()[2].lower, t.dims()[2].upper), (250.0, 1000.0));
        let small = hyperparameter_space("tsne-exact", 100).unwrap();
        assert_eq!(small.dims()[0].upper, 33.0);

        let l = hyperparameter_space("lle", 200).unwrap();
        assert_eq!((l.dims()[0].lower, l.dims()[0].upper), (5.0, 50.0));
        assert_eq!((l.dims()[1].lower, l.dims()[1].upper), (1e-4, 1e-1));
        assert!(matches!(hyperparameter_space("umap", 100), Err(Error::Lookup { .. })));
        assert!(hyperparameter_space("lle", 20).is_err());
    }

    #[test]
    fn isomap_neighbors_beyond_n_is_rejected() {
        let ds = generate_synthetic(&SyntheticSpec::new(SyntheticKind::IidGaussian, 40, 3, 1)).unwrap();
        let t = TechniqueDescriptor::builtin(Builtin::Isomap);
        let h = HyperparamAssignment::new().with("n_neighbors", ParamValue::Int(40));
        assert!(matches!(project(&t, &ds, &h, 0), Err(Error::Validation(_))));
        assert!(matches!(isomap::isomap(&ds, 40), Err(Error::Validation(_))));
    }

    #[test]
    fn every_builtin_runs_on_defaults() {
        let ds = generate_synthetic(
            &SyntheticSpec::new(SyntheticKind::GaussianMixture, 120, 6, 2).param("components", 3.0),
        )
        .unwrap();
        for t in list_techniques() {
            let space = t.hyperparameter_space(ds.n()).unwrap();
            let h = space.complete(&HyperparamAssignment::new(), &t.defaults());
            let p = project(&t, &ds, &h, 1).unwrap();
            assert_eq!(p.n(), 120, "{}", t.id);
            assert_eq!(project(&t, &ds, &h, 1).unwrap(), p, "{} not deterministic", t.id);
        }
    }
}
