//! Structural complexity metrics.
//!
//! - **PDS** (pairwise distance shift): `ln(σ / μ)` over all unordered pairwise
//!   distances. Distances concentrate in high dimension, pushing the score
//!   down; lower means more complex.
//! - **MNC** (mutual neighbor consistency): mean over points of the cosine
//!   between the point's rank-weighted kNN similarity row and its
//!   shared-nearest-neighbor similarity row. In [0, 1]; lower means more
//!   complex.
//!
//! Both depend only on the distance matrix and are invariant to global
//! scaling of the data.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::distance::{neighbor_ranking, pairwise_distances, DistanceMatrix, NeighborRanking};
use crate::error::{Error, Result};

/// Default MNC neighborhood sizes for the combined feature vector.
pub const DEFAULT_KS: [usize; 3] = [25, 50, 75];

/// Default neighborhood size when a single MNC value is requested.
pub const DEFAULT_K: usize = 50;

/// Standard deviations below this fraction of the mean are treated as zero.
const ZERO_SPREAD: f64 = 1e-12;

/// Pairwise distance shift: natural log of population std over mean of the
/// N(N-1)/2 pairwise distances.
pub fn pds(dm: &DistanceMatrix) -> Result<f64> {
    let d = dm.upper_triangle();
    if d.is_empty() {
        return Err(Error::DegenerateInput("zero distance variance".into()));
    }
    let m = d.len() as f64;
    let mean = d.iter().sum::<f64>() / m;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
    let sd = var.sqrt();
    if !(mean > 0.0) || sd <= ZERO_SPREAD * mean {
        return Err(Error::DegenerateInput("zero distance variance".into()));
    }
    Ok((sd / mean).ln())
}

/// A sparse row of a similarity matrix, owned by point `owner`. Entries are
/// sorted by column and never include the owner itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityRow {
    pub owner: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SimilarityRow {
    pub fn get(&self, j: usize) -> f64 {
        self.entries
            .binary_search_by_key(&j, |e| e.0)
            .map_or(0.0, |p| self.entries[p].1)
    }

    pub fn nonzeros(&self) -> usize {
        self.entries.iter().filter(|e| e.1 != 0.0).count()
    }
}

/// `M[i][j] = k - r + 1` when j is i's r-th nearest neighbor, else 0.
pub fn knn_similarity_matrix(nr: &NeighborRanking) -> Vec<SimilarityRow> {
    let k = nr.k();
    (0..nr.n())
        .map(|i| {
            let mut entries: Vec<(usize, f64)> = nr
                .neighbors(i)
                .iter()
                .enumerate()
                .map(|(r, &j)| (j, (k - r) as f64))
                .collect();
            entries.sort_unstable_by_key(|e| e.0);
            SimilarityRow { owner: i, entries }
        })
        .collect()
}

/// Reverse kNN index: for each point q, every (p, m) with q the m-th
/// (1-based) neighbor of p.
fn reverse_neighbors(nr: &NeighborRanking) -> Vec<Vec<(usize, usize)>> {
    let mut rev = vec![Vec::new(); nr.n()];
    for p in 0..nr.n() {
        for (pos, &q) in nr.neighbors(p).iter().enumerate() {
            rev[q].push((p, pos + 1));
        }
    }
    rev
}

/// Accumulate the SNN row of `i` into `scratch` (dense, zeroed on entry) and
/// record touched columns.
fn snn_row_into(
    nr: &NeighborRanking,
    rev: &[Vec<(usize, usize)>],
    i: usize,
    scratch: &mut [f64],
    touched: &mut Vec<usize>,
) {
    let k1 = nr.k() + 1;
    for (pos, &q) in nr.neighbors(i).iter().enumerate() {
        let wi = (k1 - (pos + 1)) as f64;
        for &(j, n) in &rev[q] {
            if j == i {
                continue;
            }
            if scratch[j] == 0.0 {
                touched.push(j);
            }
            scratch[j] += wi * (k1 - n) as f64;
        }
    }
}

/// `M[i][j] = Σ (k+1-m)(k+1-n)` over neighbors shared as i's m-th and j's
/// n-th nearest neighbor. Symmetric with a zero diagonal.
pub fn snn_similarity_matrix(nr: &NeighborRanking) -> Vec<SimilarityRow> {
    let n = nr.n();
    let rev = reverse_neighbors(nr);
    (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], Vec::new()),
            |(scratch, touched), i| {
                snn_row_into(nr, &rev, i, scratch, touched);
                touched.sort_unstable();
                let entries = touched.iter().map(|&j| (j, scratch[j])).collect();
                for &j in touched.iter() {
                    scratch[j] = 0.0;
                }
                touched.clear();
                SimilarityRow { owner: i, entries }
            },
        )
        .collect()
}

/// Mutual neighbor consistency for a precomputed ranking. A point whose SNN
/// row is all zero contributes a cosine of 0.
pub fn mnc_from_ranking(nr: &NeighborRanking) -> f64 {
    let n = nr.n();
    let k = nr.k();
    let rev = reverse_neighbors(nr);
    let knn_norm = ((k * (k + 1) * (2 * k + 1)) as f64 / 6.0).sqrt();
    let cosines: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], Vec::new()),
            |(scratch, touched), i| {
                snn_row_into(nr, &rev, i, scratch, touched);
                let snn_sq: f64 = touched.iter().map(|&j| scratch[j] * scratch[j]).sum();
                let dot: f64 = nr
                    .neighbors(i)
                    .iter()
                    .enumerate()
                    .map(|(r, &j)| (k - r) as f64 * scratch[j])
                    .sum();
                for &j in touched.iter() {
                    scratch[j] = 0.0;
                }
                touched.clear();
                if snn_sq == 0.0 {
                    0.0
                } else {
                    (dot / (knn_norm * snn_sq.sqrt())).clamp(0.0, 1.0)
                }
            },
        )
        .collect();
    cosines.iter().sum::<f64>() / n as f64
}

/// MNC of a dataset at neighborhood size `k`.
pub fn mnc(ds: &Dataset, k: usize) -> Result<f64> {
    if k == 0 || k >= ds.n() {
        return Err(Error::validation(format!(
            "k must satisfy 1 <= k <= N-1 (N={}), got {k}",
            ds.n()
        )));
    }
    let nr = neighbor_ranking(&pairwise_distances(ds), k)?;
    Ok(mnc_from_ranking(&nr))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricTag {
    #[serde(rename = "PDS")]
    Pds,
    #[serde(rename = "MNC")]
    Mnc,
}

impl fmt::Display for MetricTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricTag::Pds => "PDS",
            MetricTag::Mnc => "MNC",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityScore {
    pub metric: MetricTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub value: f64,
}

/// PDS followed by one MNC per requested k, in request order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<ComplexityScore>);

impl FeatureVector {
    pub fn values(&self) -> Vec<f64> {
        self.0.iter().map(|s| s.value).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ks(&self) -> Vec<usize> {
        self.0.iter().filter_map(|s| s.k).collect()
    }
}

pub fn complexity_features(ds: &Dataset, ks: &[usize]) -> Result<FeatureVector> {
    complexity_features_from_distances(&pairwise_distances(ds), ks)
}

/// Features sharing one distance matrix and one neighbor ranking at max(ks).
pub fn complexity_features_from_distances(dm: &DistanceMatrix, ks: &[usize]) -> Result<FeatureVector> {
    let n = dm.n();
    let kmax = ks.iter().copied().max().unwrap_or(0);
    if ks.contains(&0) {
        return Err(Error::validation("neighborhood sizes must be positive"));
    }
    if kmax >= n {
        return Err(Error::validation(format!(
            "largest k ({kmax}) must be at most N-1 ({})",
            n - 1
        )));
    }
    let mut scores = vec![ComplexityScore {
        metric: MetricTag::Pds,
        k: None,
        value: pds(dm)?,
    }];
    if kmax > 0 {
        let full = neighbor_ranking(dm, kmax)?;
        for &k in ks {
            let nr = full.truncated(k)?;
            scores.push(ComplexityScore {
                metric: MetricTag::Mnc,
                k: Some(k),
                value: mnc_from_ranking(&nr),
            });
        }
    }
    Ok(FeatureVector(scores))
}
