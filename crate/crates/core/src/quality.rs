//! Projection quality metrics. All are invariant to global scaling of either
//! space and oriented so that higher is better.
//!
//! Local metrics (trustworthiness & continuity, MRRE) work on rank matrices;
//! global ones (Spearman, Pearson) on the unordered pairwise distances.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::distance::{pairwise_distances, rank_matrix, DistanceMatrix, RankMatrix};
use crate::drtech::Projection;
use crate::error::{Error, Result};

/// Neighborhood size used by local metrics unless overridden.
pub const DEFAULT_K: usize = 10;

fn check_pair(hi: &RankMatrix, lo: &RankMatrix) -> Result<usize> {
    if hi.n() != lo.n() {
        return Err(Error::validation(format!(
            "point counts differ: {} vs {}",
            hi.n(),
            lo.n()
        )));
    }
    Ok(hi.n())
}

fn check_tnc_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || 2 * k >= n {
        return Err(Error::validation(format!(
            "trustworthiness/continuity need 1 <= k < N/2 (N={n}), got {k}"
        )));
    }
    Ok(())
}

/// Penalizes points that are among the k nearest in `lo` but not in `hi`, by
/// how far beyond k they rank in `hi`.
pub fn trustworthiness(rank_hi: &RankMatrix, rank_lo: &RankMatrix, k: usize) -> Result<f64> {
    let n = check_pair(rank_hi, rank_lo)?;
    check_tnc_k(n, k)?;
    let mut penalty = 0usize;
    for i in 0..n {
        for &j in &rank_lo.ordered(i)[..k] {
            let r = rank_hi.rank(i, j as usize);
            if r > k {
                penalty += r - k;
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    Ok(1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * penalty as f64)
}

/// Trustworthiness with the roles of the two spaces swapped.
pub fn continuity(rank_hi: &RankMatrix, rank_lo: &RankMatrix, k: usize) -> Result<f64> {
    trustworthiness(rank_lo, rank_hi, k)
}

fn harmonic(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

pub fn tnc_f1(trust: f64, cont: f64) -> f64 {
    harmonic(trust, cont)
}

pub fn mrre_f1(missing: f64, false_: f64) -> f64 {
    harmonic(missing, false_)
}

/// Worst-case relative rank error summed over the first k ranks.
pub fn mrre_normalizer(k: usize, n: usize) -> f64 {
    (1..=k)
        .map(|r| (n as f64 - 2.0 * r as f64 + 1.0).abs() / r as f64)
        .sum()
}

/// Mean relative rank errors, mapped to [0, 1] with 1 meaning no error.
///
/// Returns `(m_hi, m_lo)`: `m_hi` scores the high-dimensional neighborhoods
/// (missing neighbors, normalized by high-dimensional rank), `m_lo` the
/// projected neighborhoods (false neighbors, normalized by projected rank).
pub fn mrre(rank_hi: &RankMatrix, rank_lo: &RankMatrix, k: usize) -> Result<(f64, f64)> {
    let n = check_pair(rank_hi, rank_lo)?;
    if k == 0 || k + 1 >= n {
        return Err(Error::validation(format!("MRRE needs 1 <= k < N-1 (N={n}), got {k}")));
    }
    let mut err_hi = 0.0;
    let mut err_lo = 0.0;
    for i in 0..n {
        for &j in &rank_hi.ordered(i)[..k] {
            let (rh, rl) = (rank_hi.rank(i, j as usize), rank_lo.rank(i, j as usize));
            err_hi += rh.abs_diff(rl) as f64 / rh as f64;
        }
        for &j in &rank_lo.ordered(i)[..k] {
            let (rh, rl) = (rank_hi.rank(i, j as usize), rank_lo.rank(i, j as usize));
            err_lo += rh.abs_diff(rl) as f64 / rl as f64;
        }
    }
    let c = n as f64 * mrre_normalizer(k, n);
    Ok((1.0 - err_hi / c, 1.0 - err_lo / c))
}

fn check_dm_pair(hi: &DistanceMatrix, lo: &DistanceMatrix) -> Result<()> {
    if hi.n() != lo.n() {
        return Err(Error::validation(format!(
            "point counts differ: {} vs {}",
            hi.n(),
            lo.n()
        )));
    }
    if hi.n() < 3 {
        return Err(Error::validation("correlations need at least 3 points"));
    }
    Ok(())
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput("zero variance in pairwise distances".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Fractional ranks (1-based), ties share their average rank.
pub(crate) fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

pub fn spearman_rho(dm_hi: &DistanceMatrix, dm_lo: &DistanceMatrix) -> Result<f64> {
    check_dm_pair(dm_hi, dm_lo)?;
    let a = average_ranks(&dm_hi.upper_triangle());
    let b = average_ranks(&dm_lo.upper_triangle());
    pearson(&a, &b)
}

pub fn pearson_r(dm_hi: &DistanceMatrix, dm_lo: &DistanceMatrix) -> Result<f64> {
    check_dm_pair(dm_hi, dm_lo)?;
    pearson(&dm_hi.upper_triangle(), &dm_lo.upper_triangle())
}

/// Accuracy measures usable as optimization targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QualityMetric {
    #[serde(rename = "tnc")]
    TncF1,
    #[serde(rename = "mrre")]
    MrreF1,
    #[serde(rename = "spearman")]
    Spearman,
    #[serde(rename = "pearson")]
    Pearson,
}

impl QualityMetric {
    pub const ALL: [QualityMetric; 4] = [Self::TncF1, Self::MrreF1, Self::Spearman, Self::Pearson];

    pub fn id(self) -> &'static str {
        match self {
            Self::TncF1 => "tnc",
            Self::MrreF1 => "mrre",
            Self::Spearman => "spearman",
            Self::Pearson => "pearson",
        }
    }

    pub fn range(self) -> (f64, f64) {
        match self {
            Self::TncF1 | Self::MrreF1 => (0.0, 1.0),
            Self::Spearman | Self::Pearson => (-1.0, 1.0),
        }
    }

    pub fn is_local(self) -> bool {
        matches!(self, Self::TncF1 | Self::MrreF1)
    }

    pub fn clamp(self, v: f64) -> f64 {
        let (lo, hi) = self.range();
        v.clamp(lo, hi)
    }
}

impl FromStr for QualityMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tnc" | "tnc-f1" => Ok(Self::TncF1),
            "mrre" | "mrre-f1" => Ok(Self::MrreF1),
            "spearman" | "spearman-rho" => Ok(Self::Spearman),
            "pearson" | "pearson-r" => Ok(Self::Pearson),
            other => Err(Error::Lookup {
                kind: "metric",
                id: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for QualityMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub metric: QualityMetric,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

/// Distances and ranks of one side of a comparison, computed once and reused
/// across every projection scored against it.
#[derive(Debug)]
pub struct SpaceSummary {
    distances: DistanceMatrix,
    ranks: OnceLock<RankMatrix>,
}

impl SpaceSummary {
    pub fn new(ds: &Dataset) -> Self {
        Self::from_distances(pairwise_distances(ds))
    }

    pub fn from_distances(distances: DistanceMatrix) -> Self {
        Self {
            distances,
            ranks: OnceLock::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.distances.n()
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn ranks(&self) -> &RankMatrix {
        self.ranks.get_or_init(|| rank_matrix(&self.distances))
    }
}

/// Score `lo` as a representation of `hi` under `metric`. `k` applies to the
/// local metrics only.
pub fn evaluate(metric: QualityMetric, hi: &SpaceSummary, lo: &SpaceSummary, k: usize) -> Result<QualityScore> {
    let value = match metric {
        QualityMetric::TncF1 => {
            let t = trustworthiness(hi.ranks(), lo.ranks(), k)?;
            let c = continuity(hi.ranks(), lo.ranks(), k)?;
            tnc_f1(t, c)
        }
        QualityMetric::MrreF1 => {
            let (m_hi, m_lo) = mrre(hi.ranks(), lo.ranks(), k)?;
            mrre_f1(m_hi, m_lo)
        }
        QualityMetric::Spearman => spearman_rho(hi.distances(), lo.distances())?,
        QualityMetric::Pearson => pearson_r(hi.distances(), lo.distances())?,
    };
    Ok(QualityScore {
        metric,
        value,
        k: metric.is_local().then_some(k),
    })
}

/// Convenience wrapper scoring a projection against its source summary.
pub fn evaluate_projection(
    metric: QualityMetric,
    hi: &SpaceSummary,
    projection: &Projection,
    k: usize,
) -> Result<QualityScore> {
    if projection.n() != hi.n() {
        return Err(Error::validation(format!(
            "projection has {} points, source has {}",
            projection.n(),
            hi.n()
        )));
    }
    let lo = SpaceSummary::new(&projection.to_dataset()?);
    evaluate(metric, hi, &lo, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticKind, SyntheticSpec};

    fn summary(ds: &Dataset) -> SpaceSummary {
        SpaceSummary::new(ds)
    }

    fn gaussian(n: usize, d: usize, seed: u64) -> Dataset {
        generate_synthetic(&SyntheticSpec::new(SyntheticKind::IidGaussian, n, d, seed)).unwrap()
    }

    #[test]
    fn identical_spaces_score_one() {
        let ds = gaussian(40, 2, 1);
        let s = summary(&ds);
        assert_eq!(trustworthiness(s.ranks(), s.ranks(), 10).unwrap(), 1.0);
        assert_eq!(continuity(s.ranks(), s.ranks(), 10).unwrap(), 1.0);
        assert_eq!(mrre(s.ranks(), s.ranks(), 10).unwrap(), (1.0, 1.0));
        assert!((spearman_rho(s.distances(), s.distances()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn continuity_is_swapped_trustworthiness() {
        let hi = summary(&gaussian(30, 6, 2));
        let lo = summary(&gaussian(30, 2, 3));
        assert_eq!(
            continuity(hi.ranks(), lo.ranks(), 5).unwrap(),
            trustworthiness(lo.ranks(), hi.ranks(), 5).unwrap()
        );
    }

    #[test]
    fn tnc_k_bounds() {
        let s = summary(&gaussian(10, 2, 1));
        assert!(matches!(trustworthiness(s.ranks(), s.ranks(), 5), Err(Error::Validation(_))));
        assert!(trustworthiness(s.ranks(), s.ranks(), 4).is_ok());
        assert!(matches!(mrre(s.ranks(), s.ranks(), 9), Err(Error::Validation(_))));
    }

    #[test]
    fn f1_values() {
        assert_eq!(tnc_f1(1.0, 1.0), 1.0);
        assert_eq!(tnc_f1(1.0, 0.0), 0.0);
        assert_eq!(mrre_f1(0.0, 0.0), 0.0);
        assert!((tnc_f1(0.8, 0.6) - 0.685_714_285_714_285_7).abs() < 1e-15);
    }

    #[test]
    fn local_metrics_ignore_projection_scale() {
        let hi = summary(&gaussian(30, 5, 4));
        let lo_ds = gaussian(30, 2, 5);
        let lo = summary(&lo_ds);
        let lo7 = summary(&lo_ds.scaled(7.0).unwrap());
        assert_eq!(
            trustworthiness(hi.ranks(), lo.ranks(), 5).unwrap(),
            trustworthiness(hi.ranks(), lo7.ranks(), 5).unwrap()
        );
        assert_eq!(mrre(hi.ranks(), lo.ranks(), 5).unwrap(), mrre(hi.ranks(), lo7.ranks(), 5).unwrap());
    }

    #[test]
    fn correlations_on_scaled_and_reversed() {
        let ds = gaussian(12, 3, 6);
        let hi = pairwise_distances(&ds);
        let tripled = pairwise_distances(&ds.scaled(3.0).unwrap());
        assert!((spearman_rho(&hi, &tripled).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_r(&hi, &tripled).unwrap() - 1.0).abs() < 1e-12);

        let n = hi.n();
        let max = hi.as_slice().iter().copied().fold(0.0, f64::max);
        let mut rev = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    rev[i * n + j] = max + 1.0 - hi.get(i, j);
                }
            }
        }
        let rev = DistanceMatrix::from_full(n, rev).unwrap();
        assert!((spearman_rho(&hi, &rev).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_distances_are_degenerate() {
        let simplex = Dataset::from_rows(
            "s",
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        )
        .unwrap();
        let dm = pairwise_distances(&simplex);
        assert!(matches!(pearson_r(&dm, &dm), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn metric_ids_parse() {
        for m in QualityMetric::ALL {
            assert_eq!(m.id().parse::<QualityMetric>().unwrap(), m);
        }
        assert_eq!("tnc-f1".parse::<QualityMetric>().unwrap(), QualityMetric::TncF1);
        assert!(matches!("kl".parse::<QualityMetric>(), Err(Error::Lookup { .. })));
    }
}
