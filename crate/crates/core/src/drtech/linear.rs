//! PCA, classical MDS and the classical-scaling step shared with Isomap.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::data::Dataset;
use crate::error::{Error, Result};

use super::Projection;

/// Flip each axis so its largest-magnitude coordinate is positive.
pub(crate) fn canonical_signs(points: &mut [[f64; 2]]) {
    for axis in 0..2 {
        let pivot = points
            .iter()
            .map(|p| p[axis])
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            points.iter_mut().for_each(|p| p[axis] = -p[axis]);
        }
    }
}

/// Eigenpairs of a symmetric matrix sorted by eigenvalue, descending when
/// `largest` is set and ascending otherwise.
pub(crate) fn sorted_eigen(m: DMatrix<f64>, largest: bool) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0).ok_or_else(|| Error::Projection {
        technique: "eigensolver".into(),
        iteration: 0,
        message: "symmetric eigendecomposition did not converge".into(),
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let c = eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]);
        if largest {
            c.reverse()
        } else {
            c
        }
        .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Top-2 principal component scores, computed from the SVD of the centered
/// data.
pub fn pca(ds: &Dataset) -> Result<Projection> {
    let (n, d) = (ds.n(), ds.d());
    let mut x = DMatrix::from_row_slice(n, d, ds.points());
    for mut col in x.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let svd = x.clone().try_svd(false, true, f64::EPSILON, 0).ok_or_else(|| Error::Projection {
        technique: "pca".into(),
        iteration: 0,
        message: "SVD did not converge".into(),
    })?;
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

    let mut points = vec![[0.0; 2]; n];
    for (axis, &comp) in order.iter().take(2).enumerate() {
        let dir = v_t.row(comp);
        for (i, p) in points.iter_mut().enumerate() {
            p[axis] = x.row(i).dot(&dir);
        }
    }
    canonical_signs(&mut points);
    Projection::new(points)
}

/// Classical (Torgerson) scaling of a full distance matrix into 2-D.
pub(crate) fn classical_scaling(dist: &[f64], n: usize, technique: &str) -> Result<Projection> {
    let mut b = DMatrix::from_fn(n, n, |i, j| -0.5 * dist[i * n + j] * dist[i * n + j]);
    let row_means: Vec<f64> = (0..n).map(|i| b.row(i).mean()).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] += grand - row_means[i] - row_means[j];
        }
    }
    // symmetrize against rounding in the centering
    let b = (&b + b.transpose()) * 0.5;
    let (values, vectors) = sorted_eigen(b, true).map_err(|_| Error::Projection {
        technique: technique.to_string(),
        iteration: 0,
        message: "eigendecomposition of the centered Gram matrix failed".into(),
    })?;
    let mut points = vec![[0.0; 2]; n];
    for axis in 0..2.min(n) {
        let scale = values[axis].max(0.0).sqrt();
        for (i, p) in points.iter_mut().enumerate() {
            p[axis] = vectors[(i, axis)] * scale;
        }
    }
    canonical_signs(&mut points);
    Projection::new(points)
}

/// Classical MDS of Euclidean distances raised to `power`.
pub fn classical_mds(ds: &Dataset, power: f64) -> Result<Projection> {
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::validation(format!("distance power must be positive, got {power}")));
    }
    let dm = crate::distance::pairwise_distances(ds);
    let dist: Vec<f64> = dm.as_slice().iter().map(|v| v.powf(power)).collect();
    classical_scaling(&dist, ds.n(), "mds-classical")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticKind, SyntheticSpec};

    #[test]
    fn pca_of_planar_data_preserves_distances() {
        let spec = SyntheticSpec::new(SyntheticKind::HyperplaneEmbedded, 40, 10, 2);
        let ds = generate_synthetic(&spec).unwrap();
        let proj = pca(&ds).unwrap();
        let hi = crate::distance::pairwise_distances(&ds);
        let lo = crate::distance::pairwise_distances(&proj.to_dataset().unwrap());
        for (a, b) in hi.as_slice().iter().zip(lo.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn mds_matches_pca_on_euclidean_distances() {
        let ds = generate_synthetic(&SyntheticSpec::new(SyntheticKind::IidGaussian, 30, 5, 1)).unwrap();
        let a = pca(&ds).unwrap();
        let b = classical_mds(&ds, 1.0).unwrap();
        for (p, q) in a.points().iter().zip(b.points()) {
            assert!((p[0] - q[0]).abs() < 1e-8 && (p[1] - q[1]).abs() < 1e-8, "{p:?} {q:?}");
        }
    }

    #[test]
    fn one_dimensional_input_pads_second_axis() {
        let ds = Dataset::from_rows("l", &[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let p = pca(&ds).unwrap();
        assert!(p.points().iter().all(|q| q[1] == 0.0));
    }
}
