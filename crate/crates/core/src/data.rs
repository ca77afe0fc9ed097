//! Dataset ingestion, validation, subsampling and synthetic corpus generation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index;
use rand::Rng as _;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;

/// An N×D table of finite reals with optional integer labels.
///
/// Points are stored row-major. A `Dataset` is immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    n: usize,
    d: usize,
    points: Vec<f64>,
    labels: Option<Vec<i64>>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        points: Vec<f64>,
        n: usize,
        d: usize,
        labels: Option<Vec<i64>>,
    ) -> Result<Self> {
        if n < 3 {
            return Err(Error::validation(format!("dataset needs at least 3 points, got {n}")));
        }
        if d < 1 {
            return Err(Error::validation("dataset needs at least one column"));
        }
        if points.len() != n * d {
            return Err(Error::validation(format!(
                "point buffer has {} values, expected {}x{}",
                points.len(),
                n,
                d
            )));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::validation(format!(
                    "{} labels for {} points",
                    l.len(),
                    n
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            n,
            d,
            points,
            labels,
        })
    }

    pub fn from_rows(name: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::validation(format!(
                "row {i} has {} values, expected {d}",
                rows[i].len()
            )));
        }
        let points = rows.iter().flatten().copied().collect();
        Self::new(name, points, rows.len(), d, None)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Multiply every coordinate by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        let points = self.points.iter().map(|v| v * alpha).collect();
        Self::new(self.name.clone(), points, self.n, self.d, self.labels.clone())
    }

    /// Per-column z-scoring. Constant columns are centered but not rescaled.
    pub fn standardized(&self) -> Self {
        let n = self.n as f64;
        let mut points = self.points.clone();
        for c in 0..self.d {
            let mean = self.rows().map(|r| r[c]).sum::<f64>() / n;
            let var = self.rows().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            for r in 0..self.n {
                let v = &mut points[r * self.d + c];
                *v -= mean;
                if sd > 0.0 {
                    *v /= sd;
                }
            }
        }
        Self {
            points,
            ..self.clone()
        }
    }

    /// Keep the rows at `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut points = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            points.extend_from_slice(self.row(i));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        Self::new(self.name.clone(), points, indices.len(), self.d, labels)
    }

    /// SHA-256 over the shape and the little-endian bytes of every value.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        h.update((self.d as u64).to_le_bytes());
        for v in &self.points {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Which column of a CSV file holds labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum LabelColumn {
    Last,
    Index(usize),
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::validation("empty label column"));
        }
        if s.eq_ignore_ascii_case("last") {
            return Ok(LabelColumn::Last);
        }
        Ok(s.parse::<usize>()
            .map(LabelColumn::Index)
            .unwrap_or_else(|_| LabelColumn::Name(s.to_string())))
    }
}

impl TryFrom<String> for LabelColumn {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LabelColumn> for String {
    fn from(c: LabelColumn) -> String {
        c.to_string()
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Last => f.write_str("last"),
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub label_column: Option<LabelColumn>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: false,
            label_column: None,
        }
    }
}

/// Read a rectangular numeric CSV table.
pub fn load_dataset(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    read_dataset(file, &name, options)
}

pub fn read_dataset<R: std::io::Read>(reader: R, name: &str, options: &LoadOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Option<Vec<String>> = if options.has_header {
        let h = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?;
        Some(h.iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut records = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        records.push((line, rec));
    }
    let Some((_, first)) = records.first() else {
        return Err(Error::Parse("no data rows".into()));
    };
    let width = first.len();
    if let Some(h) = &header {
        if h.len() != width {
            return Err(Error::Parse(format!(
                "header has {} columns but rows have {width}",
                h.len()
            )));
        }
    }

    let label_idx = match &options.label_column {
        None => None,
        Some(LabelColumn::Last) => Some(width - 1),
        Some(LabelColumn::Index(i)) if *i < width => Some(*i),
        Some(LabelColumn::Index(i)) => {
            return Err(Error::validation(format!(
                "label column {i} out of range for {width} columns"
            )))
        }
        Some(LabelColumn::Name(name)) => {
            let h = header.as_ref().ok_or_else(|| {
                Error::validation(format!("label column '{name}' given by name but file has no header"))
            })?;
            Some(h.iter().position(|c| c == name).ok_or_else(|| {
                Error::validation(format!("label column '{name}' not found in header"))
            })?)
        }
    };
    let d = width - usize::from(label_idx.is_some());
    if d == 0 {
        return Err(Error::validation("no feature columns left after removing labels"));
    }

    let mut points = Vec::with_capacity(records.len() * d);
    let mut labels = label_idx.map(|_| Vec::with_capacity(records.len()));
    for (line, rec) in &records {
        let row_no = line + 1 + usize::from(options.has_header);
        if rec.len() != width {
            return Err(Error::Parse(format!(
                "row {row_no} has {} columns, expected {width}",
                rec.len()
            )));
        }
        for (c, cell) in rec.iter().enumerate() {
            if Some(c) == label_idx {
                let label = parse_label(cell).ok_or_else(|| {
                    Error::Parse(format!("row {row_no}: label '{cell}' is not an integer"))
                })?;
                labels.as_mut().unwrap().push(label);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::Parse(format!("row {row_no}, column {c}: '{cell}' is not numeric"))
                })?;
                points.push(v);
            }
        }
    }
    Dataset::new(name, points, records.len(), d, labels)
}

fn parse_label(cell: &str) -> Option<i64> {
    cell.parse::<i64>().ok().or_else(|| {
        let v: f64 = cell.parse().ok()?;
        (v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
    })
}

/// Write points (and labels as a trailing column, if present) as headerless
/// CSV. Values use the shortest representation that parses back to the same
/// bits.
pub fn write_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_dataset_to(ds, file)
}

pub fn write_dataset_to<W: std::io::Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    for i in 0..ds.n() {
        let mut fields: Vec<String> = ds.row(i).iter().map(|v| v.to_string()).collect();
        if let Some(l) = ds.labels() {
            fields.push(l[i].to_string());
        }
        w.write_record(&fields).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Uniform sample of `max_n` rows without replacement; a no-op when
/// `N <= max_n`. Selected rows keep their original relative order.
pub fn subsample(ds: &Dataset, max_n: usize, seed: u64) -> Result<Dataset> {
    if max_n < 3 {
        return Err(Error::validation(format!("max_n must be at least 3, got {max_n}")));
    }
    if ds.n() <= max_n {
        return Ok(ds.clone());
    }
    let mut rng = rng::seeded(seed);
    let mut picked = index::sample(&mut rng, ds.n(), max_n).into_vec();
    picked.sort_unstable();
    ds.select_rows(&picked)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    IidGaussian,
    IidUniform,
    GaussianMixture,
    SwissRoll,
    HyperplaneEmbedded,
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid-gaussian" => Ok(Self::IidGaussian),
            "iid-uniform" => Ok(Self::IidUniform),
            "gaussian-mixture" => Ok(Self::GaussianMixture),
            "swiss-roll" => Ok(Self::SwissRoll),
            "hyperplane-embedded" => Ok(Self::HyperplaneEmbedded),
            other => Err(Error::validation(format!("unknown synthetic kind '{other}'"))),
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::IidGaussian => "iid-gaussian",
            Self::IidUniform => "iid-uniform",
            Self::GaussianMixture => "gaussian-mixture",
            Self::SwissRoll => "swiss-roll",
            Self::HyperplaneEmbedded => "hyperplane-embedded",
        })
    }
}

/// Parameters for a synthetic dataset. The output is a pure function of this
/// value.
///
/// Recognized `params`:
/// - gaussian-mixture: `components` (3), `spread` (1.0), `separation` (5.0),
///   `imbalance` (0.0; component c gets weight `exp(-imbalance * c)`)
/// - swiss-roll: `noise` (0.0); requires `d >= 3`
/// - hyperplane-embedded: `intrinsic` (2), `noise` (0.0)
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n: usize,
    pub d: usize,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, n: usize, d: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            d,
            params: BTreeMap::new(),
            seed,
        }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    fn get(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn default_name(&self) -> String {
        format!("{}-n{}-d{}-s{}", self.kind, self.n, self.d, self.seed)
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    let (n, d) = (spec.n, spec.d);
    if n < 3 || d < 1 {
        return Err(Error::validation(format!("synthetic spec needs n >= 3 and d >= 1, got n={n}, d={d}")));
    }
    let mut rng = rng::seeded(spec.seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut labels = None;
    let points: Vec<f64> = match spec.kind {
        SyntheticKind::IidGaussian => (0..n * d).map(|_| gauss()).collect(),
        SyntheticKind::IidUniform => {
            let mut rng = rng::seeded(spec.seed);
            (0..n * d).map(|_| rng.random::<f64>()).collect()
        }
        SyntheticKind::GaussianMixture => {
            let components = spec.get("components", 3.0);
            if components < 1.0 || components.fract() != 0.0 {
                return Err(Error::validation("components must be a positive integer"));
            }
            let components = components as usize;
            let spread = spec.get("spread", 1.0);
            let separation = spec.get("separation", 5.0);
            let centers: Vec<f64> = (0..components * d).map(|_| gauss() * separation).collect();
            let imbalance = spec.get("imbalance", 0.0);
            if !(imbalance >= 0.0 && imbalance.is_finite()) {
                return Err(Error::validation("imbalance must be a finite non-negative number"));
            }
            let mut rng = rng::seeded(rng::derive_seed(spec.seed, "assign"));
            let assign: Vec<i64> = if imbalance == 0.0 {
                (0..n).map(|_| rng.random_range(0..components) as i64).collect()
            } else {
                // component c drawn with weight exp(-imbalance * c)
                let weights: Vec<f64> = (0..components).map(|c| (-imbalance * c as f64).exp()).collect();
                let pick = WeightedIndex::new(&weights).map_err(|e| Error::validation(e.to_string()))?;
                (0..n).map(|_| pick.sample(&mut rng) as i64).collect()
            };
            let mut pts = Vec::with_capacity(n * d);
            for &c in &assign {
                let center = &centers[c as usize * d..(c as usize + 1) * d];
                for &mu in center {
                    pts.push(mu + spread * gauss());
                }
            }
            labels = Some(assign);
            pts
        }
        SyntheticKind::SwissRoll => {
            if d < 3 {
                return Err(Error::validation("swiss-roll needs d >= 3"));
            }
            let noise = spec.get("noise", 0.0);
            let mut rng = rng::seeded(spec.seed);
            let mut noise_rng = rng::seeded(rng::derive_seed(spec.seed, "noise"));
            let mut pts = Vec::with_capacity(n * d);
            for _ in 0..n {
                let t = 1.5 * std::f64::consts::PI * (1.0 + 2.0 * rng.random::<f64>());
                let h = 21.0 * rng.random::<f64>();
                let mut row = vec![0.0; d];
                row[0] = t * t.cos();
                row[1] = h;
                row[2] = t * t.sin();
                if noise > 0.0 {
                    for v in &mut row {
                        let e: f64 = StandardNormal.sample(&mut noise_rng);
                        *v += noise * e;
                    }
                }
                pts.extend(row);
            }
            pts
        }
        SyntheticKind::HyperplaneEmbedded => {
            let intrinsic = spec.get("intrinsic", 2.0);
            if intrinsic < 1.0 || intrinsic.fract() != 0.0 || intrinsic as usize > d {
                return Err(Error::validation(format!(
                    "intrinsic dimension must be an integer in [1, {d}]"
                )));
            }
            let m = intrinsic as usize;
            let noise = spec.get("noise", 0.0);
            let basis = orthonormal_basis(d, m, &mut gauss);
            let mut pts = Vec::with_capacity(n * d);
            for _ in 0..n {
                let latent: Vec<f64> = (0..m).map(|_| gauss()).collect();
                for r in 0..d {
                    let v: f64 = (0..m).map(|c| basis[c][r] * latent[c]).sum();
                    pts.push(v);
                }
            }
            if noise > 0.0 {
                for v in &mut pts {
                    *v += noise * gauss();
                }
            }
            pts
        }
    };
    Dataset::new(spec.default_name(), points, n, d, labels)
}

/// `m` orthonormal vectors in R^d by Gram-Schmidt over Gaussian draws.
fn orthonormal_basis(d: usize, m: usize, gauss: &mut impl FnMut() -> f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    while basis.len() < m {
        let mut v: Vec<f64> = (0..d).map(|_| gauss()).collect();
        for b in &basis {
            let proj: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis
}

/// One entry of a corpus manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<LabelColumn>,
}

/// Read a JSON array of manifest entries. Relative paths resolve against the
/// manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut entries: Vec<ManifestEntry> = serde_json::from_str(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    for e in &mut entries {
        if e.path.is_relative() {
            e.path = base.join(&e.path);
        }
    }
    Ok(entries)
}

/// Load every dataset listed in a manifest, naming each after its entry.
pub fn load_corpus(manifest: impl AsRef<Path>, has_header: bool) -> Result<Vec<Dataset>> {
    read_manifest(manifest)?
        .into_iter()
        .map(|e| {
            let opts = LoadOptions {
                has_header,
                label_column: e.label_column.clone(),
                ..LoadOptions::default()
            };
            load_dataset(&e.path, &opts).map(|ds| ds.with_name(e.name))
        })
        .collect()
}

/// A varied synthetic corpus: mixtures, manifolds, embedded planes and i.i.d.
/// clouds across a range of ambient dimensions.
pub fn synthetic_corpus(count: usize, n: usize, seed: u64) -> Result<Vec<Dataset>> {
    const DIMS: [usize; 8] = [3, 4, 8, 12, 20, 32, 64, 128];
    let mut rng = rng::seeded(seed);
    (0..count)
        .map(|i| {
            let d = DIMS[rng.random_range(0..DIMS.len())];
            let s = rng::derive_seed_index(seed, i as u64);
            let spec = match i % 5 {
                0 => SyntheticSpec::new(SyntheticKind::IidGaussian, n, d, s),
                1 => SyntheticSpec::new(SyntheticKind::GaussianMixture, n, d, s)
                    .param("components", rng.random_range(2..7) as f64)
                    .param("separation", rng.random_range(0f64..4.0).exp())
                    .param("imbalance", rng.random_range(0.0..4.0)),
                2 => SyntheticSpec::new(SyntheticKind::HyperplaneEmbedded, n, d, s)
                    .param("intrinsic", rng.random_range(2..=d.min(10)) as f64)
                    .param("noise", rng.random_range(0.0..0.3)),
                3 => SyntheticSpec::new(SyntheticKind::SwissRoll, n, d, s)
                    .param("noise", rng.random_range(0.0..1.5)),
                _ => SyntheticSpec::new(SyntheticKind::IidUniform, n, d, s),
            };
            Ok(generate_synthetic(&spec)?.with_name(format!("synth-{i:03}-{}", spec.kind)))
        })
        .collect()
}
