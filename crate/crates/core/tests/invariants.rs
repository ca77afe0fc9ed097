//! Property tests for the structural and quality metrics.

use proptest::prelude::*;

use dradapt::complexity::{knn_similarity_matrix, mnc, mnc_from_ranking, pds, snn_similarity_matrix};
use dradapt::data::Dataset;
use dradapt::distance::{neighbor_ranking, pairwise_distances, rank_matrix};
use dradapt::quality::{evaluate, QualityMetric, SpaceSummary};

/// Points with continuous coordinates, so distance ties have probability zero.
fn cloud(n: std::ops::RangeInclusive<usize>, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    n.prop_flat_map(move |n| prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), n))
}

fn dataset(rows: &[Vec<f64>]) -> Dataset {
    Dataset::from_rows("p", rows).unwrap()
}

fn permuted(rows: &[Vec<f64>], perm: &[usize]) -> Vec<Vec<f64>> {
    perm.iter().map(|&i| rows[i].clone()).collect()
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pds_and_mnc_ignore_global_scale(rows in cloud(8..=40, 4), alpha in prop::sample::select(vec![1e-6, 1e-3, 1.0, 1e3, 1e6])) {
        let ds = dataset(&rows);
        let scaled = ds.scaled(alpha).unwrap();
        let (p0, p1) = (pds(&pairwise_distances(&ds)).unwrap(), pds(&pairwise_distances(&scaled)).unwrap());
        prop_assert!((p0 - p1).abs() <= 1e-9);
        let k = ds.n() / 3;
        prop_assert_eq!(mnc(&ds, k).unwrap(), mnc(&scaled, k).unwrap());
    }

    #[test]
    fn metrics_ignore_point_order(
        (rows, lo, perm) in cloud(8..=30, 5).prop_flat_map(|rows| {
            let n = rows.len();
            (Just(rows), prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), n), permutation(n))
        })
    ) {
        let k = 3;
        let (hi, lo_ds) = (dataset(&rows), dataset(&lo));
        let (hi_p, lo_p) = (dataset(&permuted(&rows, &perm)), dataset(&permuted(&lo, &perm)));
        prop_assert!((pds(&pairwise_distances(&hi)).unwrap() - pds(&pairwise_distances(&hi_p)).unwrap()).abs() < 1e-12);
        prop_assert!((mnc(&hi, k).unwrap() - mnc(&hi_p, k).unwrap()).abs() < 1e-12);
        let (a, b) = (SpaceSummary::new(&hi), SpaceSummary::new(&lo_ds));
        let (ap, bp) = (SpaceSummary::new(&hi_p), SpaceSummary::new(&lo_p));
        for m in QualityMetric::ALL {
            let v = evaluate(m, &a, &b, k).unwrap().value;
            let vp = evaluate(m, &ap, &bp, k).unwrap().value;
            prop_assert!((v - vp).abs() < 1e-12, "{} {} vs {}", m.id(), v, vp);
        }
    }

    #[test]
    fn quality_metrics_stay_in_range_and_ignore_scale(
        (rows, lo) in cloud(8..=30, 6).prop_flat_map(|rows| {
            let n = rows.len();
            (Just(rows), prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), n))
        }),
        alpha in prop::sample::select(vec![1e-3, 1e3]),
    ) {
        let hi = dataset(&rows);
        let lo = dataset(&lo);
        let (a, b) = (SpaceSummary::new(&hi), SpaceSummary::new(&lo));
        let (a_s, b_s) = (SpaceSummary::new(&hi.scaled(alpha).unwrap()), SpaceSummary::new(&lo.scaled(1.0 / alpha).unwrap()));
        for m in QualityMetric::ALL {
            let v = evaluate(m, &a, &b, 3).unwrap().value;
            let (lo_r, hi_r) = m.range();
            prop_assert!(v.is_finite() && v >= lo_r - 1e-12 && v <= hi_r + 1e-12);
            let vs = evaluate(m, &a_s, &b_s, 3).unwrap().value;
            if m == QualityMetric::Pearson {
                prop_assert!((v - vs).abs() <= 1e-9);
            } else {
                prop_assert_eq!(v, vs);
            }
        }
    }

    #[test]
    fn similarity_matrix_shape(rows in cloud(6..=40, 3), k_frac in 0.05f64..0.95) {
        let dm = pairwise_distances(&dataset(&rows));
        let k = ((rows.len() - 1) as f64 * k_frac).ceil() as usize;
        let nr = neighbor_ranking(&dm, k).unwrap();
        let knn = knn_similarity_matrix(&nr);
        for row in &knn {
            prop_assert_eq!(row.nonzeros(), k);
            prop_assert_eq!(row.get(row.owner), 0.0);
            let total: f64 = row.entries.iter().map(|e| e.1).sum();
            prop_assert_eq!(total, (k * (k + 1) / 2) as f64);
        }
        let snn = snn_similarity_matrix(&nr);
        for i in 0..rows.len() {
            prop_assert_eq!(snn[i].get(i), 0.0);
            for j in 0..rows.len() {
                prop_assert_eq!(snn[i].get(j), snn[j].get(i));
            }
        }
        let v = mnc_from_ranking(&nr);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn rank_rows_are_permutations(rows in cloud(3..=25, 2)) {
        let dm = pairwise_distances(&dataset(&rows));
        let rm = rank_matrix(&dm);
        let n = rows.len();
        for i in 0..n {
            prop_assert_eq!(rm.rank(i, i), 0);
            let mut r: Vec<usize> = (0..n).filter(|&j| j != i).map(|j| rm.rank(i, j)).collect();
            r.sort_unstable();
            prop_assert_eq!(r, (1..n).collect::<Vec<_>>());
            for j in 0..n {
                prop_assert_eq!(dm.get(i, j), dm.get(j, i));
            }
        }
        let k = (n - 1).min(3);
        let nr = neighbor_ranking(&dm, k).unwrap();
        for i in 0..n {
            for (r, &j) in nr.neighbors(i).iter().enumerate() {
                prop_assert_eq!(rm.rank(i, j), r + 1);
            }
        }
    }
}

#[test]
fn identity_projection_scores_one() {
    let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.37).sin() * 3.0, (i as f64 * 1.3).cos() + i as f64 * 0.1]).collect();
    let s = SpaceSummary::new(&dataset(&rows));
    for m in QualityMetric::ALL {
        let v = evaluate(m, &s, &s, 10).unwrap().value;
        assert!((v - 1.0).abs() < 1e-12, "{} = {v}", m.id());
    }
}
