//! Isomap: geodesic distances over a symmetrized kNN graph, then classical
//! scaling. Disconnected graphs are joined through their closest
//! inter-component pairs until a single component remains.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::distance::{neighbor_ranking, pairwise_distances, DistanceMatrix};
use crate::error::{Error, Result};

use super::linear::classical_scaling;
use super::Projection;

type Graph = Vec<Vec<(usize, f64)>>;

fn knn_graph(dm: &DistanceMatrix, k: usize) -> Result<Graph> {
    let n = dm.n();
    let nr = neighbor_ranking(dm, k)?;
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for &j in nr.neighbors(i) {
            adj[i].push((j, dm.get(i, j)));
            adj[j].push((i, dm.get(i, j)));
        }
    }
    for row in &mut adj {
        row.sort_by_key(|e| e.0);
        row.dedup_by_key(|e| e.0);
    }
    Ok(adj)
}

fn components(adj: &Graph) -> Vec<usize> {
    let n = adj.len();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        label[s] = next;
        while let Some(u) = stack.pop() {
            for &(v, _) in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    label
}

/// Add edges between the closest pair of points in different components
/// until the graph is connected. Returns the number of edges added.
pub(crate) fn connect_components(adj: &mut Graph, dm: &DistanceMatrix) -> usize {
    let mut added = 0;
    loop {
        let label = components(adj);
        if label.iter().all(|&l| l == 0) {
            return added;
        }
        let n = adj.len();
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                if label[i] != label[j] {
                    let d = dm.get(i, j);
                    if best.is_none_or(|b| d < b.0) {
                        best = Some((d, i, j));
                    }
                }
            }
        }
        let (d, i, j) = best.expect("at least two components");
        adj[i].push((j, d));
        adj[j].push((i, d));
        added += 1;
    }
}

#[derive(PartialEq)]
struct Visit(f64, usize);

impl Eq for Visit {}

impl Ord for Visit {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &Graph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Visit(0.0, source));
    while let Some(Visit(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Visit(nd, v));
            }
        }
    }
    dist
}

/// All-pairs shortest path lengths over the repaired kNN graph.
pub fn geodesic_distances(ds: &Dataset, n_neighbors: usize) -> Result<Vec<f64>> {
    let n = ds.n();
    if n_neighbors == 0 || n_neighbors >= n {
        return Err(Error::validation(format!(
            "isomap needs 1 <= n_neighbors < N (N={n}), got {n_neighbors}"
        )));
    }
    let dm = pairwise_distances(ds);
    let mut adj = knn_graph(&dm, n_neighbors)?;
    let added = connect_components(&mut adj, &dm);
    if added > 0 {
        log::debug!("isomap: joined disconnected neighborhood graph with {added} extra edges");
    }
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra(&adj, s)).collect();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            // average the two directions so the matrix is exactly symmetric
            let d = 0.5 * (rows[i][j] + rows[j][i]);
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    Ok(out)
}

pub fn isomap(ds: &Dataset, n_neighbors: usize) -> Result<Projection> {
    let geo = geodesic_distances(ds, n_neighbors)?;
    classical_scaling(&geo, ds.n(), "isomap")
}
