//! Exact t-SNE (no Barnes-Hut approximation).
//!
//! Gradient descent with momentum and per-coordinate gains, early
//! exaggeration of 12 for the first 250 iterations.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::data::Dataset;
use crate::distance::pairwise_distances;
use crate::error::{Error, Result};
use crate::rng;

use super::Projection;

pub const EARLY_EXAGGERATION: f64 = 12.0;
pub const EXAGGERATION_ITERS: usize = 250;
const INITIAL_MOMENTUM: f64 = 0.5;
const FINAL_MOMENTUM: f64 = 0.8;
const MIN_GAIN: f64 = 0.01;
const P_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsneParams {
    pub perplexity: f64,
    pub learning_rate: f64,
    pub n_iter: usize,
}

/// Conditional Gaussian affinities of one point, with the precision found by
/// bisection so the row entropy equals `ln(perplexity)`.
fn conditional_row(dist_sq: &[f64], i: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let n = dist_sq.len();
    let (mut beta, mut lo, mut hi) = (1.0, f64::NEG_INFINITY, f64::INFINITY);
    let mut row = vec![0.0; n];
    // shift by the nearest distance for numerical range
    let dmin = dist_sq
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    for _ in 0..200 {
        let mut sum = 0.0;
        let mut weighted = 0.0;
        for j in 0..n {
            if j == i {
                row[j] = 0.0;
                continue;
            }
            let v = (-(dist_sq[j] - dmin) * beta).exp();
            row[j] = v;
            sum += v;
            weighted += v * (dist_sq[j] - dmin);
        }
        let entropy = sum.ln() + beta * weighted / sum;
        let diff = entropy - target;
        if diff.abs() < 1e-10 {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = if lo.is_finite() { (beta + lo) / 2.0 } else { beta / 2.0 };
        }
    }
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= sum);
    row
}

/// Symmetric joint affinities `P` (row-major N×N, zero diagonal, summing to 1)
/// for the given squared distances.
pub fn joint_affinities(dist_sq: &[f64], n: usize, perplexity: f64) -> Result<Vec<f64>> {
    if !(perplexity > 1.0 && perplexity < n as f64) {
        return Err(Error::validation(format!(
            "perplexity must be in (1, N) for N={n}, got {perplexity}"
        )));
    }
    let cond: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| conditional_row(&dist_sq[i * n..(i + 1) * n], i, perplexity))
        .collect();
    let mut p = vec![0.0; n * n];
    let norm = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((cond[i][j] + cond[j][i]) / norm).max(P_FLOOR);
            }
        }
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    Ok(p)
}

/// Student-t kernel values `1 / (1 + |yi - yj|²)` for row `i`, and their sum.
fn kernel_row(y: &[[f64; 2]], i: usize, out: &mut [f64]) -> f64 {
    let mut sum = 0.0;
    for (j, yj) in y.iter().enumerate() {
        if j == i {
            out[j] = 0.0;
            continue;
        }
        let dx = y[i][0] - yj[0];
        let dy = y[i][1] - yj[1];
        let v = 1.0 / (1.0 + dx * dx + dy * dy);
        out[j] = v;
        sum += v;
    }
    sum
}

fn kernel_total(y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let sums: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(|| vec![0.0; n], |buf, i| kernel_row(y, i, buf))
        .collect();
    sums.iter().sum()
}

/// KL(P || Q) for embedding `y`.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let z = kernel_total(y);
    let mut buf = vec![0.0; n];
    let mut kl = 0.0;
    for i in 0..n {
        kernel_row(y, i, &mut buf);
        for j in 0..n {
            let pij = p[i * n + j];
            if j != i && pij > 0.0 {
                kl += pij * (pij / (buf[j] / z)).ln();
            }
        }
    }
    kl
}

/// Gradient of the KL objective scaled by `exaggeration` on P:
/// `4 Σ_j (e·p_ij − q_ij)(y_i − y_j) / (1 + |y_i − y_j|²)`.
pub fn kl_gradient_scaled(p: &[f64], y: &[[f64; 2]], exaggeration: f64) -> Vec<[f64; 2]> {
    let n = y.len();
    let z = kernel_total(y);
    (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, i| {
                kernel_row(y, i, buf);
                let mut g = [0.0; 2];
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let w = buf[j];
                    let coef = (exaggeration * p[i * n + j] - w / z) * w;
                    g[0] += coef * (y[i][0] - y[j][0]);
                    g[1] += coef * (y[i][1] - y[j][1]);
                }
                [4.0 * g[0], 4.0 * g[1]]
            },
        )
        .collect()
}

pub fn kl_gradient(p: &[f64], y: &[[f64; 2]]) -> Vec<[f64; 2]> {
    kl_gradient_scaled(p, y, 1.0)
}

pub fn tsne(ds: &Dataset, params: TsneParams, seed: u64) -> Result<Projection> {
    let n = ds.n();
    if !(params.perplexity > 1.0 && 3.0 * params.perplexity <= (n - 1) as f64) {
        return Err(Error::validation(format!(
            "perplexity must satisfy 1 < perplexity <= (N-1)/3 (N={n}), got {}",
            params.perplexity
        )));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) || params.n_iter == 0 {
        return Err(Error::validation("t-SNE needs a positive learning rate and iteration count"));
    }
    let dm = pairwise_distances(ds);
    let dist_sq: Vec<f64> = dm.as_slice().iter().map(|d| d * d).collect();
    let p = joint_affinities(&dist_sq, n, params.perplexity)?;

    let mut rng = rng::seeded(seed);
    let init = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [init.sample(&mut rng), init.sample(&mut rng)]).collect();
    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];

    for iter in 0..params.n_iter {
        let (exag, momentum) = if iter < EXAGGERATION_ITERS {
            (EARLY_EXAGGERATION, INITIAL_MOMENTUM)
        } else {
            (1.0, FINAL_MOMENTUM)
        };
        let grad = kl_gradient_scaled(&p, &y, exag);
        for i in 0..n {
            for a in 0..2 {
                let g = grad[i][a];
                gains[i][a] = if (g > 0.0) != (update[i][a] > 0.0) {
                    gains[i][a] + 0.2
                } else {
                    (gains[i][a] * 0.8).max(MIN_GAIN)
                };
                update[i][a] = momentum * update[i][a] - params.learning_rate * gains[i][a] * g;
                y[i][a] += update[i][a];
            }
        }
        for a in 0..2 {
            let mean = y.iter().map(|v| v[a]).sum::<f64>() / n as f64;
            y.iter_mut().for_each(|v| v[a] -= mean);
        }
        if (iter % 50 == 0 || iter + 1 == params.n_iter) && y.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(Error::Projection {
                technique: "tsne-exact".into(),
                iteration: iter,
                message: "non-finite coordinates".into(),
            });
        }
    }
    Projection::new(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticKind, SyntheticSpec};

    #[test]
    fn affinity_rows_hit_target_perplexity() {
        let ds = generate_synthetic(&SyntheticSpec::new(SyntheticKind::IidGaussian, 40, 3, 1)).unwrap();
        let dm = pairwise_distances(&ds);
        let sq: Vec<f64> = dm.as_slice().iter().map(|d| d * d).collect();
        for i in [0, 17, 39] {
            let row = conditional_row(&sq[i * 40..(i + 1) * 40], i, 10.0);
            let h: f64 = row.iter().filter(|&&v| v > 0.0).map(|v| -v * v.ln()).sum();
            assert!((h.exp() - 10.0).abs() < 1e-6);
        }
        let p = joint_affinities(&sq, 40, 10.0).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p[3 * 40 + 7], p[7 * 40 + 3]);
    }

    #[test]
    fn rejects_large_perplexity() {
        let ds = generate_synthetic(&SyntheticSpec::new(SyntheticKind::IidGaussian, 20, 3, 1)).unwrap();
        let params = TsneParams {
            perplexity: 10.0,
            learning_rate: 200.0,
            n_iter: 250,
        };
        assert!(matches!(tsne(&ds, params, 0), Err(Error::Validation(_))));
    }
}
