//! Dense Euclidean distances, k-nearest-neighbor rankings and full rank
//! matrices.
//!
//! Ties in distance are always broken by ascending point index, so every
//! ranking here is deterministic.

use std::cmp::Ordering;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Symmetric N×N Euclidean distance matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Build from a full row-major buffer, checking the metric invariants.
    pub fn from_full(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::validation(format!(
                "distance buffer has {} entries, expected {}",
                data.len(),
                n * n
            )));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::validation(format!("non-zero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let v = data[i * n + j];
                if !v.is_finite() || v < 0.0 || v != data[j * n + i] {
                    return Err(Error::validation(format!(
                        "invalid or asymmetric distance at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// The N(N-1)/2 distances of unordered pairs, in (i < j) row-major order.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            out.extend_from_slice(&self.data[i * n + i + 1..(i + 1) * n]);
        }
        out
    }

    /// Little-endian layout: N as u64, then N*N row-major f64 values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 8];
        r.read_exact(&mut head)?;
        let n = usize::try_from(u64::from_le_bytes(head))
            .map_err(|_| Error::Parse("distance cache size overflows".into()))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != n * n * 8 {
            return Err(Error::Parse(format!(
                "distance cache holds {} bytes, expected {}",
                bytes.len(),
                n * n * 8
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_full(n, data)
    }
}

/// Euclidean distances between all rows. Each unordered pair is computed once
/// and mirrored, so symmetry is exact.
pub fn pairwise_distances(ds: &Dataset) -> DistanceMatrix {
    let n = ds.n();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = ds.row(i);
            ((i + 1)..n)
                .map(|j| {
                    a.iter()
                        .zip(ds.row(j))
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect();
    let mut data = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    DistanceMatrix { n, data }
}

/// Distances for a dataset, read from or written to `dir` keyed by the
/// dataset's content hash.
pub fn cached_pairwise_distances(ds: &Dataset, dir: &Path) -> Result<DistanceMatrix> {
    let path = cache_path(ds, dir);
    if path.exists() {
        let file = std::fs::File::open(&path)?;
        let dm = DistanceMatrix::read_binary(std::io::BufReader::new(file))?;
        if dm.n() == ds.n() {
            return Ok(dm);
        }
        log::warn!("ignoring stale distance cache {}", path.display());
    }
    let dm = pairwise_distances(ds);
    std::fs::create_dir_all(dir)?;
    let file = std::fs::File::create(&path)?;
    dm.write_binary(std::io::BufWriter::new(file))?;
    Ok(dm)
}

pub fn cache_path(ds: &Dataset, dir: &Path) -> PathBuf {
    dir.join(format!("{}.dist", ds.content_hash()))
}

#[inline]
fn by_distance_then_index(row: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b))
}

/// For each point, its k nearest other points in ascending distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborRanking {
    k: usize,
    nn: Vec<usize>,
}

impl NeighborRanking {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.nn.len() / self.k
    }

    /// Neighbors of `i`; position r (0-based) holds the (r+1)-th nearest.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.nn[i * self.k..(i + 1) * self.k]
    }

    /// The ranking restricted to the first `k` neighbors of each point.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k {
            return Err(Error::validation(format!(
                "cannot truncate a k={} ranking to k={k}",
                self.k
            )));
        }
        let nn = self
            .nn
            .chunks_exact(self.k)
            .flat_map(|row| row[..k].iter().copied())
            .collect();
        Ok(Self { k, nn })
    }
}

pub fn neighbor_ranking(dm: &DistanceMatrix, k: usize) -> Result<NeighborRanking> {
    let n = dm.n();
    if k == 0 || k >= n {
        return Err(Error::validation(format!(
            "k must satisfy 1 <= k <= N-1 (N={n}), got {k}"
        )));
    }
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = dm.row(i);
            let mut idx: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let cmp = by_distance_then_index(row);
            if k < idx.len() {
                idx.select_nth_unstable_by(k - 1, &cmp);
                idx.truncate(k);
            }
            idx.sort_unstable_by(&cmp);
            idx
        })
        .collect();
    Ok(NeighborRanking {
        k,
        nn: rows.into_iter().flatten().collect(),
    })
}

/// N×N matrix of 1-based neighbor ranks: entry (i, j) is the position of j
/// among all other points ordered by distance from i. Diagonal is 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankMatrix {
    n: usize,
    ranks: Vec<u32>,
    order: Vec<u32>,
}

impl RankMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn rank(&self, i: usize, j: usize) -> usize {
        self.ranks[i * self.n + j] as usize
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.ranks[i * self.n..(i + 1) * self.n]
    }

    /// Other points ordered by ascending rank from `i` (length N-1).
    pub fn ordered(&self, i: usize) -> &[u32] {
        let m = self.n - 1;
        &self.order[i * m..(i + 1) * m]
    }
}

pub fn rank_matrix(dm: &DistanceMatrix) -> RankMatrix {
    let n = dm.n();
    let rows: Vec<(Vec<u32>, Vec<u32>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut idx: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            idx.sort_unstable_by(by_distance_then_index(dm.row(i)));
            let mut ranks = vec![0u32; n];
            for (pos, &j) in idx.iter().enumerate() {
                ranks[j] = pos as u32 + 1;
            }
            (ranks, idx.into_iter().map(|j| j as u32).collect())
        })
        .collect();
    let mut ranks = Vec::with_capacity(n * n);
    let mut order = Vec::with_capacity(n * n.saturating_sub(1));
    for (r, o) in rows {
        ranks.extend(r);
        order.extend(o);
    }
    RankMatrix { n, ranks, order }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticKind, SyntheticSpec};

    fn line(values: &[f64]) -> Dataset {
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        Dataset::from_rows("line", &rows).unwrap()
    }

    #[test]
    fn hand_checked_distances() {
        let dm = pairwise_distances(&line(&[0.0, 1.0, 2.0]));
        assert_eq!(dm.upper_triangle(), vec![1.0, 2.0, 1.0]);
        assert!((0..3).all(|i| dm.get(i, i) == 0.0));

        let ds = Dataset::from_rows("t", &[vec![0.0, 0.0], vec![3.0, 4.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(pairwise_distances(&ds).get(0, 1), 5.0);
    }

    #[test]
    fn ranking_breaks_ties_by_index() {
        let dm = pairwise_distances(&line(&[0.0, 1.0, 2.0, 3.0, 4.0]));
        let nr = neighbor_ranking(&dm, 2).unwrap();
        assert_eq!(nr.neighbors(1), &[0, 2]);
        assert_eq!(nr.neighbors(0), &[1, 2]);
        assert_eq!(nr.neighbors(4), &[3, 2]);
        assert!(matches!(neighbor_ranking(&dm, 5), Err(Error::Validation(_))));
        assert!(matches!(neighbor_ranking(&dm, 0), Err(Error::Validation(_))));
    }

    #[test]
    fn ranking_matches_full_sort_oracle() {
        let ds = generate_synthetic(&SyntheticSpec::new(SyntheticKind::IidGaussian, 50, 5, 4)).unwrap();
        let dm = pairwise_distances(&ds);
        let nr = neighbor_ranking(&dm, 7).unwrap();
        for i in 0..50 {
            let mut all: Vec<(f64, usize)> = (0..50).filter(|&j| j != i).map(|j| (dm.get(i, j), j)).collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let expect: Vec<usize> = all[..7].iter().map(|p| p.1).collect();
            assert_eq!(nr.neighbors(i), expect.as_slice());
        }
    }

    #[test]
    fn rank_matrix_rows_are_permutations_and_agree_with_knn() {
        let ds = generate_synthetic(&SyntheticSpec::new(SyntheticKind::IidUniform, 30, 3, 2)).unwrap();
        let dm = pairwise_distances(&ds);
        let rm = rank_matrix(&dm);
        let nr = neighbor_ranking(&dm, 5).unwrap();
        for i in 0..30 {
            assert_eq!(rm.rank(i, i), 0);
            let mut r: Vec<u32> = rm.row(i).iter().copied().filter(|&v| v != 0).collect();
            r.sort_unstable();
            assert_eq!(r, (1..30).collect::<Vec<u32>>());
            for (pos, &j) in nr.neighbors(i).iter().enumerate() {
                assert_eq!(rm.rank(i, j), pos + 1);
                assert_eq!(rm.ordered(i)[pos] as usize, j);
            }
        }
    }

    #[test]
    fn collinear_ranks() {
        let rm = rank_matrix(&pairwise_distances(&line(&[0.0, 1.0, 2.0])));
        assert_eq!(rm.rank(0, 1), 1);
        assert_eq!(rm.rank(0, 2), 2);
        // point 1 is equidistant from 0 and 2
        assert_eq!(rm.rank(1, 0), 1);
        assert_eq!(rm.rank(1, 2), 2);
    }

    #[test]
    fn scaling_preserves_rankings() {
        let ds = generate_synthetic(&SyntheticSpec::new(SyntheticKind::IidGaussian, 40, 4, 8)).unwrap();
        let dm = pairwise_distances(&ds);
        for alpha in [1e-6, 1e6] {
            let dm2 = pairwise_distances(&ds.scaled(alpha).unwrap());
            assert_eq!(rank_matrix(&dm), rank_matrix(&dm2));
            assert_eq!(neighbor_ranking(&dm, 6).unwrap(), neighbor_ranking(&dm2, 6).unwrap());
            for (a, b) in dm.as_slice().iter().zip(dm2.as_slice()) {
                assert!((a * alpha - b).abs() <= 1e-12 * b.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn binary_cache_round_trip() {
        let ds = generate_synthetic(&SyntheticSpec::new(SyntheticKind::IidGaussian, 12, 3, 1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let first = cached_pairwise_distances(&ds, dir.path()).unwrap();
        let path = cache_path(&ds, dir.path());
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 8 + 12 * 12 * 8);
        assert_eq!(u64::from_le_bytes(bytes[..8].try_into().unwrap()), 12);
        let second = cached_pairwise_distances(&ds, dir.path()).unwrap();
        assert_eq!(first, second);
    }
}
