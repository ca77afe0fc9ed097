//! Regressors mapping complexity feature vectors to achievable accuracy.
//!
//! Four model kinds: ordinary least squares, full degree-2 polynomial
//! (squares and pairwise interactions), distance-weighted kNN, and a random
//! forest of CART trees. Linear, polynomial and kNN models standardize
//! features with training statistics.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Ridge penalty used for the polynomial model and as the fallback for
/// singular linear systems.
pub const RIDGE: f64 = 1e-8;
pub const MIN_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressorKind {
    Linear,
    Polynomial2,
    Knn,
    RandomForest,
}

impl RegressorKind {
    pub const ALL: [RegressorKind; 4] = [Self::Linear, Self::Polynomial2, Self::Knn, Self::RandomForest];

    pub fn id(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Polynomial2 => "polynomial2",
            Self::Knn => "knn",
            Self::RandomForest => "random-forest",
        }
    }
}

impl FromStr for RegressorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::Lookup {
                kind: "regressor",
                id: s.to_string(),
            })
    }
}

impl fmt::Display for RegressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Tunables that stay fixed across the workflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressorConfig {
    pub knn_k: usize,
    pub n_trees: usize,
    pub min_samples_leaf: usize,
}

impl Default for RegressorConfig {
    fn default() -> Self {
        Self {
            knn_k: 5,
            n_trees: 100,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(x: &[Vec<f64>]) -> Self {
        let d = x[0].len();
        let n = x.len() as f64;
        let mean: Vec<f64> = (0..d).map(|c| x.iter().map(|r| r[c]).sum::<f64>() / n).collect();
        let scale = (0..d)
            .map(|c| {
                let var = x.iter().map(|r| (r[c] - mean[c]).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// One node of a regression tree, stored in a flat arena.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "kebab-case")]
pub enum TreeNode {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

/// CART regression tree: every feature is considered at every node; the split
/// minimizing the summed squared error of the children wins (first feature,
/// then lowest threshold, on ties), threshold at the midpoint between
/// adjacent distinct values. Nodes stop splitting when pure or too small.
fn grow_tree(x: &[Vec<f64>], y: &[f64], sample: &[usize], min_leaf: usize) -> Tree {
    let mut nodes = Vec::new();
    grow_node(x, y, sample.to_vec(), min_leaf, &mut nodes);
    Tree { nodes }
}

fn grow_node(x: &[Vec<f64>], y: &[f64], idx: Vec<usize>, min_leaf: usize, nodes: &mut Vec<TreeNode>) -> usize {
    let me = nodes.len();
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
    nodes.push(TreeNode::Leaf { value: mean });
    let sse: f64 = idx.iter().map(|&i| (y[i] - mean).powi(2)).sum();
    if idx.len() < 2 * min_leaf || sse <= 1e-14 * (1.0 + mean * mean) * n {
        return me;
    }

    let d = x[0].len();
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = idx.clone();
    for f in 0..d {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let total: f64 = order.iter().map(|&i| y[i]).sum();
        let total_sq: f64 = order.iter().map(|&i| y[i] * y[i]).sum();
        let (mut ls, mut lsq) = (0.0, 0.0);
        for pos in 0..order.len() - 1 {
            let v = y[order[pos]];
            ls += v;
            lsq += v * v;
            let nl = (pos + 1) as f64;
            let nr = n - nl;
            if pos + 1 < min_leaf || order.len() - pos - 1 < min_leaf {
                continue;
            }
            let (a, b) = (x[order[pos]][f], x[order[pos + 1]][f]);
            if a == b {
                continue;
            }
            let rs = total - ls;
            let rsq = total_sq - lsq;
            let cost = (lsq - ls * ls / nl) + (rsq - rs * rs / nr);
            if best.is_none_or(|bst| cost < bst.0 - 1e-12 * (1.0 + bst.0.abs())) {
                best = Some((cost, f, 0.5 * (a + b)));
            }
        }
    }
    let Some((cost, feature, threshold)) = best else {
        return me;
    };
    if cost >= sse {
        return me;
    }
    let (li, ri): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| x[i][feature] <= threshold);
    let left = grow_node(x, y, li, min_leaf, nodes);
    let right = grow_node(x, y, ri, min_leaf, nodes);
    nodes[me] = TreeNode::Split {
        feature,
        threshold,
        left,
        right,
    };
    me
}

/// Learned state of a regression model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelState {
    Linear {
        standardizer: Standardizer,
        weights: Vec<f64>,
        intercept: f64,
    },
    Polynomial2 {
        standardizer: Standardizer,
        weights: Vec<f64>,
        intercept: f64,
    },
    Knn {
        standardizer: Standardizer,
        k: usize,
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
    },
    RandomForest {
        trees: Vec<Tree>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub feature_arity: usize,
    pub state: ModelState,
}

fn check_training(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::validation(format!("{} feature rows for {} targets", x.len(), y.len())));
    }
    if x.len() < MIN_SAMPLES {
        return Err(Error::validation(format!(
            "need at least {MIN_SAMPLES} training samples, got {}",
            x.len()
        )));
    }
    let arity = x[0].len();
    if arity == 0 {
        return Err(Error::validation("feature vectors are empty"));
    }
    if let Some(i) = x.iter().position(|r| r.len() != arity) {
        return Err(Error::validation(format!(
            "feature row {i} has arity {}, expected {arity}",
            x[i].len()
        )));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite training value"));
    }
    Ok(arity)
}

fn poly2_expand(z: &[f64]) -> Vec<f64> {
    let mut out = z.to_vec();
    for i in 0..z.len() {
        for j in i..z.len() {
            out.push(z[i] * z[j]);
        }
    }
    out
}

/// Least squares with an intercept. Solves the normal equations by Cholesky;
/// falls back to a ridge penalty of `RIDGE` (scaled by the Gram diagonal)
/// when the system is singular. `ridge` forces the penalty from the start.
fn least_squares(rows: &[Vec<f64>], y: &[f64], ridge: bool) -> (Vec<f64>, f64) {
    let n = rows.len();
    let p = rows[0].len();
    let a = DMatrix::from_fn(n, p + 1, |r, c| if c == p { 1.0 } else { rows[r][c] });
    let b = DVector::from_column_slice(y);
    let gram = a.transpose() * &a;
    let rhs = a.transpose() * b;
    let solve = |lambda: f64| {
        let mut g = gram.clone();
        let scale = (0..p).map(|i| g[(i, i)]).fold(0.0, f64::max).max(1.0);
        for i in 0..p {
            g[(i, i)] += lambda * scale;
        }
        g.cholesky().map(|c| c.solve(&rhs))
    };
    let beta = if ridge { None } else { solve(0.0) }
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .or_else(|| solve(RIDGE))
        .or_else(|| solve(1e-4))
        .unwrap_or_else(|| {
            // pseudo-inverse as a last resort
            let svd = a.clone().svd(true, true);
            svd.solve(&DVector::from_column_slice(y), 1e-12).expect("svd solve")
        });
    (beta.iter().take(p).copied().collect(), beta[p])
}

pub fn fit(kind: RegressorKind, x: &[Vec<f64>], y: &[f64], seed: u64) -> Result<RegressionModel> {
    fit_with(kind, x, y, seed, &RegressorConfig::default())
}

pub fn fit_with(
    kind: RegressorKind,
    x: &[Vec<f64>],
    y: &[f64],
    seed: u64,
    config: &RegressorConfig,
) -> Result<RegressionModel> {
    let arity = check_training(x, y)?;
    let state = match kind {
        RegressorKind::Linear => {
            let standardizer = Standardizer::fit(x);
            let z: Vec<Vec<f64>> = x.iter().map(|r| standardizer.apply(r)).collect();
            let (weights, intercept) = least_squares(&z, y, false);
            ModelState::Linear {
                standardizer,
                weights,
                intercept,
            }
        }
        RegressorKind::Polynomial2 => {
            let standardizer = Standardizer::fit(x);
            let z: Vec<Vec<f64>> = x.iter().map(|r| poly2_expand(&standardizer.apply(r))).collect();
            let (weights, intercept) = least_squares(&z, y, true);
            ModelState::Polynomial2 {
                standardizer,
                weights,
                intercept,
            }
        }
        RegressorKind::Knn => {
            if config.knn_k == 0 {
                return Err(Error::validation("knn_k must be positive"));
            }
            let standardizer = Standardizer::fit(x);
            ModelState::Knn {
                x: x.iter().map(|r| standardizer.apply(r)).collect(),
                standardizer,
                k: config.knn_k,
                y: y.to_vec(),
            }
        }
        RegressorKind::RandomForest => {
            if config.n_trees == 0 || config.min_samples_leaf == 0 {
                return Err(Error::validation("forest needs at least one tree and a positive leaf size"));
            }
            let n = x.len();
            let trees = (0..config.n_trees)
                .into_par_iter()
                .map(|t| {
                    let mut r = rng::seeded(rng::derive_seed_index(seed, t as u64));
                    let sample: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
                    grow_tree(x, y, &sample, config.min_samples_leaf)
                })
                .collect();
            ModelState::RandomForest { trees }
        }
    };
    Ok(RegressionModel {
        feature_arity: arity,
        state,
    })
}

impl RegressionModel {
    pub fn kind(&self) -> RegressorKind {
        match self.state {
            ModelState::Linear { .. } => RegressorKind::Linear,
            ModelState::Polynomial2 { .. } => RegressorKind::Polynomial2,
            ModelState::Knn { .. } => RegressorKind::Knn,
            ModelState::RandomForest { .. } => RegressorKind::RandomForest,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_arity {
            return Err(Error::validation(format!(
                "model expects {} features, got {}",
                self.feature_arity,
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite feature value"));
        }
        let dot = |w: &[f64], z: &[f64]| w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        Ok(match &self.state {
            ModelState::Linear {
                standardizer,
                weights,
                intercept,
            } => intercept + dot(weights, &standardizer.apply(x)),
            ModelState::Polynomial2 {
                standardizer,
                weights,
                intercept,
            } => intercept + dot(weights, &poly2_expand(&standardizer.apply(x))),
            ModelState::Knn {
                standardizer,
                k,
                x: train,
                y,
            } => knn_predict(&standardizer.apply(x), train, y, *k),
            ModelState::RandomForest { trees } => {
                trees.iter().map(|t| t.predict(x)).sum::<f64>() / trees.len() as f64
            }
        })
    }
}

/// Inverse-distance weighted mean of the k nearest training targets. Exact
/// matches take precedence: their targets are averaged.
fn knn_predict(q: &[f64], train: &[Vec<f64>], y: &[f64], k: usize) -> f64 {
    let mut d: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let exact: Vec<f64> = d.iter().take_while(|e| e.0 == 0.0).map(|e| y[e.1]).collect();
    if !exact.is_empty() {
        return exact.iter().sum::<f64>() / exact.len() as f64;
    }
    let nearest = &d[..k.min(d.len())];
    let wsum: f64 = nearest.iter().map(|e| 1.0 / e.0).sum();
    nearest.iter().map(|e| y[e.1] / e.0).sum::<f64>() / wsum
}

/// Coefficient of determination. A target without variance scores 0.
pub fn r2_score(y: &[f64], pred: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot <= 1e-20 * y.len() as f64 * (1.0 + mean * mean) {
        return 0.0;
    }
    let ss_res: f64 = y.iter().zip(pred).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub kind: RegressorKind,
    pub mean_r2: f64,
    pub fold_r2: Vec<f64>,
    pub seed: u64,
}

/// Shuffled k-fold assignment: fold of the i-th shuffled sample is `i % folds`.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

pub fn cross_validate(kind: RegressorKind, x: &[Vec<f64>], y: &[f64], folds: usize, seed: u64) -> Result<CvReport> {
    cross_validate_with(kind, x, y, folds, seed, &RegressorConfig::default())
}

pub fn cross_validate_with(
    kind: RegressorKind,
    x: &[Vec<f64>],
    y: &[f64],
    folds: usize,
    seed: u64,
    config: &RegressorConfig,
) -> Result<CvReport> {
    if folds < 2 {
        return Err(Error::validation("need at least 2 folds"));
    }
    if x.len() < folds || x.len() != y.len() {
        return Err(Error::validation(format!(
            "{} samples cannot fill {folds} folds",
            x.len()
        )));
    }
    let assign = fold_assignment(x.len(), folds, seed);
    let mut fold_r2 = Vec::with_capacity(folds);
    for f in 0..folds {
        let (train, test): (Vec<usize>, Vec<usize>) = (0..x.len()).partition(|&i| assign[i] != f);
        let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let cfg = RegressorConfig {
            knn_k: config.knn_k.min(tx.len()),
            ..*config
        };
        if tx.len() < MIN_SAMPLES {
            return Err(Error::validation(format!(
                "training fold of {} samples is below the minimum of {MIN_SAMPLES}",
                tx.len()
            )));
        }
        let model = fit_with(kind, &tx, &ty, rng::derive_seed_index(seed, f as u64), &cfg)?;
        let truth: Vec<f64> = test.iter().map(|&i| y[i]).collect();
        let pred = test.iter().map(|&i| model.predict(&x[i])).collect::<Result<Vec<f64>>>()?;
        fold_r2.push(r2_score(&truth, &pred));
    }
    let mean_r2 = fold_r2.iter().sum::<f64>() / folds as f64;
    Ok(CvReport {
        kind,
        mean_r2,
        fold_r2,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn random_x(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng::seeded(seed);
        (0..n)
            .map(|_| (0..d).map(|_| StandardNormal.sample(&mut r)).collect())
            .collect()
    }

    fn train_r2(model: &RegressionModel, x: &[Vec<f64>], y: &[f64]) -> f64 {
        let pred: Vec<f64> = x.iter().map(|r| model.predict(r).unwrap()).collect();
        r2_score(y, &pred)
    }

    #[test]
    fn linear_recovers_exact_relation() {
        let x = random_x(30, 4, 1);
        let y: Vec<f64> = x.iter().map(|r| 0.5 + 2.0 * r[0] - r[2] + 0.1 * r[3]).collect();
        let m = fit(RegressorKind::Linear, &x, &y, 0).unwrap();
        assert!(train_r2(&m, &x, &y) >= 1.0 - 1e-9);
        let p = m.predict(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((p - 2.5).abs() < 1e-9);
    }

    #[test]
    fn linear_prediction_is_affine_in_scaling() {
        let x = random_x(20, 4, 2);
        let y: Vec<f64> = x.iter().map(|r| r[0] + 0.3 * r[1] * r[1]).collect();
        let m = fit(RegressorKind::Linear, &x, &y, 0).unwrap();
        let q = [0.3, -1.2, 0.5, 2.0];
        let at = |a: f64| m.predict(&q.map(|v| a * v)).unwrap();
        // f(a x) = c + a * s  =>  f(2x) - f(x) = f(x) - f(0)
        assert!(((at(2.0) - at(1.0)) - (at(1.0) - at(0.0))).abs() < 1e-9);
    }

    #[test]
    fn polynomial_recovers_square() {
        let x = random_x(30, 2, 3);
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[0]).collect();
        let m = fit(RegressorKind::Polynomial2, &x, &y, 0).unwrap();
        assert!(train_r2(&m, &x, &y) >= 1.0 - 1e-6);
    }

    #[test]
    fn constant_target() {
        let x = random_x(12, 3, 4);
        let y = vec![0.7; 12];
        for kind in RegressorKind::ALL {
            let m = fit(kind, &x, &y, 1).unwrap();
            for r in &x {
                assert!((m.predict(r).unwrap() - 0.7).abs() < 1e-9, "{kind}");
            }
            assert_eq!(train_r2(&m, &x, &y), 0.0);
        }
    }

    #[test]
    fn knn_exact_hit_and_k1() {
        let x = random_x(15, 3, 5);
        let y: Vec<f64> = (0..15).map(|i| i as f64).collect();
        let m = fit(RegressorKind::Knn, &x, &y, 0).unwrap();
        assert_eq!(m.predict(&x[4]).unwrap(), 4.0);
        let cfg = RegressorConfig {
            knn_k: 1,
            ..Default::default()
        };
        let m1 = fit_with(RegressorKind::Knn, &x, &y, 0, &cfg).unwrap();
        for (r, t) in x.iter().zip(&y) {
            assert_eq!(m1.predict(r).unwrap(), *t);
        }
    }

    #[test]
    fn forest_predictions_bounded_and_deterministic() {
        let x = random_x(40, 4, 6);
        let y: Vec<f64> = x.iter().map(|r| (r[0] * 2.0).sin() + r[1]).collect();
        let m = fit(RegressorKind::RandomForest, &x, &y, 9).unwrap();
        let (lo, hi) = y.iter().fold((f64::MAX, f64::MIN), |a, &v| (a.0.min(v), a.1.max(v)));
        for q in random_x(50, 4, 7) {
            let p = m.predict(&q).unwrap();
            assert!(p >= lo && p <= hi);
        }
        assert_eq!(fit(RegressorKind::RandomForest, &x, &y, 9).unwrap(), m);
        assert!(train_r2(&m, &x, &y) > 0.8);
    }

    #[test]
    fn arity_and_size_errors() {
        let x = random_x(4, 2, 8);
        assert!(matches!(fit(RegressorKind::Linear, &x, &[0.0; 4], 0), Err(Error::Validation(_))));
        let x = random_x(6, 2, 8);
        let m = fit(RegressorKind::Linear, &x, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 0).unwrap();
        assert!(matches!(m.predict(&[1.0]), Err(Error::Validation(_))));
        let mut ragged = x.clone();
        ragged[2].push(1.0);
        assert!(fit(RegressorKind::Knn, &ragged, &[0.0; 6], 0).is_err());
    }

    #[test]
    fn cross_validation_on_noiseless_linear() {
        let x = random_x(40, 4, 10);
        let y: Vec<f64> = x.iter().map(|r| 1.0 + r[0] - 2.0 * r[1]).collect();
        let rep = cross_validate(RegressorKind::Linear, &x, &y, 5, 3).unwrap();
        assert_eq!(rep.fold_r2.len(), 5);
        assert!(rep.mean_r2 >= 0.999);
        let mean = rep.fold_r2.iter().sum::<f64>() / 5.0;
        assert_eq!(rep.mean_r2, mean);
        assert_eq!(cross_validate(RegressorKind::Linear, &x, &y, 5, 3).unwrap(), rep);
        assert!(cross_validate(RegressorKind::Linear, &x[..4], &y[..4], 5, 3).is_err());
    }

    #[test]
    fn cross_validation_on_noise_is_poor() {
        // Monte-Carlo: independent noise should not be predictable
        let mut total = 0.0;
        for s in 0..20 {
            let x = random_x(40, 4, 100 + s);
            let y: Vec<f64> = random_x(40, 1, 500 + s).into_iter().map(|r| r[0]).collect();
            total += cross_validate(RegressorKind::Linear, &x, &y, 5, s).unwrap().mean_r2;
        }
        assert!(total / 20.0 <= 0.2, "{}", total / 20.0);
    }

    #[test]
    fn model_json_round_trip() {
        let x = random_x(20, 4, 11);
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[1]).collect();
        for kind in RegressorKind::ALL {
            let m = fit(kind, &x, &y, 2).unwrap();
            let back: RegressionModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn mean_predictor_scores_zero() {
        let y = [1.0, 2.0, 3.0, 6.0];
        assert_eq!(r2_score(&y, &[3.0; 4]), 0.0);
        assert!(r2_score(&y, &[6.0, 3.0, 2.0, 1.0]) <= 1.0);
    }
}
