//! Locally linear embedding.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::distance::{neighbor_ranking, pairwise_distances};
use crate::error::{Error, Result};

use super::linear::{canonical_signs, sorted_eigen};
use super::Projection;

/// Reconstruction weights of each point from its neighbors, regularized by
/// `reg * trace(C)` on the local Gram matrix.
fn reconstruction_weights(ds: &Dataset, n_neighbors: usize, reg: f64) -> Result<Vec<Vec<(usize, f64)>>> {
    let dm = pairwise_distances(ds);
    let nr = neighbor_ranking(&dm, n_neighbors)?;
    let d = ds.d();
    (0..ds.n())
        .map(|i| {
            let nbrs = nr.neighbors(i);
            let xi = ds.row(i);
            let z = DMatrix::from_fn(n_neighbors, d, |r, c| ds.row(nbrs[r])[c] - xi[c]);
            let mut gram = &z * z.transpose();
            let trace = gram.trace();
            let eps = if trace > 0.0 { reg * trace } else { reg };
            for r in 0..n_neighbors {
                gram[(r, r)] += eps;
            }
            let ones = DVector::from_element(n_neighbors, 1.0);
            let w = gram
                .clone()
                .cholesky()
                .map(|c| c.solve(&ones))
                .or_else(|| gram.lu().solve(&ones))
                .ok_or_else(|| Error::Projection {
                    technique: "lle".into(),
                    iteration: i,
                    message: "singular local Gram matrix".into(),
                })?;
            let sum = w.sum();
            if !sum.is_finite() || sum == 0.0 {
                return Err(Error::Projection {
                    technique: "lle".into(),
                    iteration: i,
                    message: "degenerate reconstruction weights".into(),
                });
            }
            Ok(nbrs.iter().zip(w.iter()).map(|(&j, &v)| (j, v / sum)).collect())
        })
        .collect()
}

pub fn lle(ds: &Dataset, n_neighbors: usize, reg: f64) -> Result<Projection> {
    let n = ds.n();
    if n_neighbors == 0 || n_neighbors >= n {
        return Err(Error::validation(format!(
            "lle needs 1 <= n_neighbors < N (N={n}), got {n_neighbors}"
        )));
    }
    if n < 4 {
        return Err(Error::validation("lle needs at least 4 points"));
    }
    if !(reg > 0.0 && reg.is_finite()) {
        return Err(Error::validation(format!("regularization must be positive, got {reg}")));
    }
    let weights = reconstruction_weights(ds, n_neighbors, reg)?;

    // M = (I - W)^T (I - W)
    let mut iw = DMatrix::<f64>::identity(n, n);
    for (i, row) in weights.iter().enumerate() {
        for &(j, w) in row {
            iw[(i, j)] -= w;
        }
    }
    let m = iw.transpose() * &iw;
    let m = (&m + m.transpose()) * 0.5;
    let (_, vectors) = sorted_eigen(m, false).map_err(|_| Error::Projection {
        technique: "lle".into(),
        iteration: 0,
        message: "eigendecomposition of the embedding cost matrix failed".into(),
    })?;
    // skip the bottom (constant) eigenvector
    let mut points: Vec<[f64; 2]> = (0..n).map(|i| [vectors[(i, 1)], vectors[(i, 2)]]).collect();
    canonical_signs(&mut points);
    Projection::new(points)
}
