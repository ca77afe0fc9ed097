//! Hyperparameter search: random search and Gaussian-process Bayesian
//! optimization, both with an optional early-stop threshold.
//!
//! Objectives receive an assignment and a seed. The seed is fixed for the
//! whole search, so the score of an assignment is reproducible and repeated
//! proposals are answered from the cache.

use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::drtech::space::{HyperparamAssignment, HyperparamSpace};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

pub const DEFAULT_BUDGET: usize = 50;
pub const DEFAULT_N_INIT: usize = 10;
pub const DEFAULT_CANDIDATES: usize = 256;
const GP_NOISE: f64 = 1e-6;
const EI_XI: f64 = 0.01;
const LENGTH_SCALES: [f64; 8] = [0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.2, 2.0];

mod score_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub assignment: HyperparamAssignment,
    /// Objective value; `-inf` (serialized as null) for a failed evaluation.
    #[serde(with = "score_serde")]
    pub score: f64,
    pub seed: u64,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Answered from the evaluation cache rather than a fresh evaluation.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub cached: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    BudgetExhausted,
    EarlyThreshold,
    ObjectiveError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StopCriterion {
    None,
    Threshold { threshold: f64 },
}

impl StopCriterion {
    fn satisfied(&self, score: f64) -> bool {
        match self {
            Self::None => false,
            Self::Threshold { threshold } => score >= *threshold,
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match self {
            Self::None => None,
            Self::Threshold { threshold } => Some(*threshold),
        }
    }
}

pub fn make_threshold_stop(predicted_max: f64) -> Result<StopCriterion> {
    if !predicted_max.is_finite() {
        return Err(Error::validation(format!("threshold must be finite, got {predicted_max}")));
    }
    Ok(StopCriterion::Threshold {
        threshold: predicted_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub trials: Vec<Trial>,
    pub best: usize,
    pub stop_reason: StopReason,
    pub stop: StopCriterion,
}

impl OptimizationTrace {
    pub fn best_trial(&self) -> &Trial {
        &self.trials[self.best]
    }

    pub fn best_score(&self) -> f64 {
        self.trials[self.best].score
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Running maximum of the scores.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.trials
            .iter()
            .scan(f64::NEG_INFINITY, |m, t| {
                *m = m.max(t.score);
                Some(*m)
            })
            .collect()
    }

    pub fn wall_time_s(&self) -> f64 {
        self.trials.iter().map(|t| t.wall_time_s).sum()
    }

    /// Converts a trace in which every trial failed into `Error::Objective`.
    pub fn into_result(self) -> Result<Self> {
        if self.stop_reason == StopReason::ObjectiveError {
            let last = self
                .trials
                .iter()
                .rev()
                .find_map(|t| t.error.clone())
                .unwrap_or_default();
            return Err(Error::Objective {
                trials: self.trials.len(),
                last,
            });
        }
        Ok(self)
    }
}

/// Writes one JSON line per trial plus a footer `{best, best_score, stop_reason}`.
/// Wall times are dropped unless `timings` is set.
pub fn write_trace_jsonl<W: Write>(trace: &OptimizationTrace, mut w: W, timings: bool) -> Result<()> {
    for t in &trace.trials {
        let mut v = serde_json::to_value(t)?;
        if !timings {
            crate::report::strip_timings(&mut v);
        }
        serde_json::to_writer(&mut w, &v)?;
        w.write_all(b"\n")?;
    }
    let best = trace.best_score();
    let footer = serde_json::json!({
        "footer": true,
        "best": trace.best,
        "best_score": best.is_finite().then_some(best),
        "stop_reason": trace.stop_reason,
        "stop": trace.stop,
    });
    serde_json::to_writer(&mut w, &footer)?;
    w.write_all(b"\n")?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesConfig {
    pub n_init: usize,
    pub candidates: usize,
}

impl Default for BayesConfig {
    fn default() -> Self {
        Self {
            n_init: DEFAULT_N_INIT,
            candidates: DEFAULT_CANDIDATES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Random,
    Bayes(BayesConfig),
}

struct Search<'a, F> {
    objective: F,
    stop: StopCriterion,
    objective_seed: u64,
    cache: HashMap<String, usize>,
    trials: Vec<Trial>,
    space: &'a HyperparamSpace,
}

impl<F: FnMut(&HyperparamAssignment, u64) -> Result<f64>> Search<'_, F> {
    /// Evaluates (or recalls) `h`; returns true when the stop criterion fires.
    fn run(&mut self, h: HyperparamAssignment) -> bool {
        let key = h.key();
        let index = self.trials.len();
        let trial = if let Some(&prev) = self.cache.get(&key) {
            let p = &self.trials[prev];
            Trial {
                index,
                assignment: h,
                score: p.score,
                seed: p.seed,
                wall_time_s: 0.0,
                error: p.error.clone(),
                cached: true,
            }
        } else {
            let start = Instant::now();
            let outcome = (self.objective)(&h, self.objective_seed);
            let wall_time_s = start.elapsed().as_secs_f64();
            let (score, error) = match outcome {
                Ok(s) if s.is_finite() => (s, None),
                Ok(s) => (f64::NEG_INFINITY, Some(format!("objective returned {s}"))),
                Err(e) => {
                    log::debug!("trial {index} failed: {e}");
                    (f64::NEG_INFINITY, Some(e.to_string()))
                }
            };
            self.cache.insert(key, index);
            Trial {
                index,
                assignment: h,
                score,
                seed: self.objective_seed,
                wall_time_s,
                error,
                cached: false,
            }
        };
        let fired = trial.score.is_finite() && self.stop.satisfied(trial.score);
        self.trials.push(trial);
        fired
    }

    fn finish(self, fired: bool) -> OptimizationTrace {
        // first index attaining the maximum
        let best = self
            .trials
            .iter()
            .enumerate()
            .fold(0, |b, (i, t)| if t.score > self.trials[b].score { i } else { b });
        let stop_reason = if fired {
            StopReason::EarlyThreshold
        } else if self.trials.iter().all(|t| !t.score.is_finite()) {
            StopReason::ObjectiveError
        } else {
            StopReason::BudgetExhausted
        };
        OptimizationTrace {
            trials: self.trials,
            best,
            stop_reason,
            stop: self.stop,
        }
    }
}

/// Runs a search and returns its trace even when every evaluation failed
/// (`stop_reason = objective-error`). An empty space is evaluated once.
pub fn search<F>(
    method: Method,
    objective: F,
    space: &HyperparamSpace,
    budget: usize,
    seed: u64,
    stop: StopCriterion,
) -> Result<OptimizationTrace>
where
    F: FnMut(&HyperparamAssignment, u64) -> Result<f64>,
{
    if budget == 0 {
        return Err(Error::validation("budget must be at least 1"));
    }
    if let StopCriterion::Threshold { threshold } = stop {
        if !threshold.is_finite() {
            return Err(Error::validation("stop threshold must be finite"));
        }
    }
    let mut s = Search {
        objective,
        stop,
        objective_seed: rng::derive_seed(seed, "objective"),
        cache: HashMap::new(),
        trials: Vec::with_capacity(budget),
        space,
    };
    if space.is_empty() {
        let fired = s.run(HyperparamAssignment::new());
        return Ok(s.finish(fired));
    }
    let mut proposal_rng = rng::seeded(rng::derive_seed(seed, "proposals"));
    match method {
        Method::Random => {
            for _ in 0..budget {
                let h = space.sample(&mut proposal_rng);
                if s.run(h) {
                    return Ok(s.finish(true));
                }
            }
        }
        Method::Bayes(cfg) => {
            if cfg.n_init == 0 || budget < cfg.n_init {
                return Err(Error::validation(format!(
                    "budget {budget} is below the {} initial random trials",
                    cfg.n_init
                )));
            }
            for i in 0..budget {
                let h = if i < cfg.n_init {
                    space.sample(&mut proposal_rng)
                } else {
                    propose(&s.trials, &s.cache, s.space, cfg.candidates, &mut proposal_rng)
                };
                if s.run(h) {
                    return Ok(s.finish(true));
                }
            }
        }
    }
    Ok(s.finish(false))
}

pub fn random_search<F>(
    objective: F,
    space: &HyperparamSpace,
    budget: usize,
    seed: u64,
    stop: StopCriterion,
) -> Result<OptimizationTrace>
where
    F: FnMut(&HyperparamAssignment, u64) -> Result<f64>,
{
    search(Method::Random, objective, space, budget, seed, stop)?.into_result()
}

pub fn bayes_optimize<F>(
    objective: F,
    space: &HyperparamSpace,
    budget: usize,
    seed: u64,
    stop: StopCriterion,
) -> Result<OptimizationTrace>
where
    F: FnMut(&HyperparamAssignment, u64) -> Result<f64>,
{
    search(Method::Bayes(BayesConfig::default()), objective, space, budget, seed, stop)?.into_result()
}

/// Next proposal: the unevaluated candidate maximizing expected improvement
/// under the GP fitted to the history. Falls back to a random draw when no
/// finite observation exists or the GP cannot be fitted.
fn propose(
    trials: &[Trial],
    cache: &HashMap<String, usize>,
    space: &HyperparamSpace,
    n_candidates: usize,
    rng: &mut Rng,
) -> HyperparamAssignment {
    let dim = space.len();
    let mut candidates: Vec<(Vec<f64>, HyperparamAssignment)> = Vec::with_capacity(n_candidates);
    for _ in 0..n_candidates {
        let u: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let h = space.decode(&u);
        if !cache.contains_key(&h.key()) {
            let snapped = space.encode(&h).unwrap_or(u);
            candidates.push((snapped, h));
        }
    }
    if candidates.is_empty() {
        // every candidate was already evaluated; the cache answers this one
        return space.sample(rng);
    }

    let observed: Vec<&Trial> = trials.iter().filter(|t| !t.cached).collect();
    let min_finite = observed
        .iter()
        .map(|t| t.score)
        .filter(|s| s.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !min_finite.is_finite() {
        return candidates.swap_remove(0).1;
    }
    let x: Vec<Vec<f64>> = observed
        .iter()
        .map(|t| space.encode(&t.assignment).unwrap_or_else(|_| vec![0.5; dim]))
        .collect();
    let y: Vec<f64> = observed
        .iter()
        .map(|t| if t.score.is_finite() { t.score } else { min_finite })
        .collect();
    let gp = match GaussianProcess::fit(&x, &y) {
        Some(gp) => gp,
        None => {
            log::warn!("GP fit failed after {} trials; proposing at random", trials.len());
            return candidates.swap_remove(0).1;
        }
    };
    let best = gp.best_standardized();
    let mut pick = 0;
    let mut pick_ei = f64::NEG_INFINITY;
    for (i, (u, _)) in candidates.iter().enumerate() {
        let (mu, var) = gp.predict(u);
        let ei = expected_improvement(mu, var.max(0.0).sqrt(), best);
        if ei > pick_ei {
            pick = i;
            pick_ei = ei;
        }
    }
    candidates.swap_remove(pick).1
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn expected_improvement(mu: f64, sigma: f64, best: f64) -> f64 {
    let gain = mu - best - EI_XI;
    if sigma <= 1e-12 {
        return gain.max(0.0);
    }
    let z = gain / sigma;
    gain * normal_cdf(z) + sigma * normal_pdf(z)
}

/// Matérn-5/2 kernel with unit signal variance.
fn matern52(r: f64, length: f64) -> f64 {
    let s = 5f64.sqrt() * r / length;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Zero-mean GP on standardized targets with an isotropic Matérn-5/2 kernel;
/// the length scale is chosen from a fixed grid by marginal likelihood.
struct GaussianProcess {
    x: Vec<Vec<f64>>,
    y_std: Vec<f64>,
    length: f64,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    alpha: DVector<f64>,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

impl GaussianProcess {
    fn fit(x: &[Vec<f64>], y: &[f64]) -> Option<Self> {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let sd = if sd > 1e-12 { sd } else { 1.0 };
        let y_std: Vec<f64> = y.iter().map(|v| (v - mean) / sd).collect();
        let yv = DVector::from_column_slice(&y_std);

        let mut best: Option<(f64, Self)> = None;
        for &length in &LENGTH_SCALES {
            let Some(chol) = Self::factor(x, length) else {
                continue;
            };
            let alpha = chol.solve(&yv);
            let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum();
            let lml = -0.5 * yv.dot(&alpha) - log_det;
            if !lml.is_finite() {
                continue;
            }
            if best.as_ref().is_none_or(|b| lml > b.0) {
                best = Some((
                    lml,
                    Self {
                        x: x.to_vec(),
                        y_std: y_std.clone(),
                        length,
                        chol,
                        alpha,
                    },
                ));
            }
        }
        best.map(|b| b.1)
    }

    fn factor(x: &[Vec<f64>], length: f64) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        let m = x.len();
        let k = DMatrix::from_fn(m, m, |i, j| matern52(euclid(&x[i], &x[j]), length));
        // escalate jitter if the nominal noise is not enough
        [GP_NOISE, 1e-5, 1e-4].iter().find_map(|&noise| {
            let mut kn = k.clone();
            for i in 0..m {
                kn[(i, i)] += noise;
            }
            kn.cholesky()
        })
    }

    fn best_standardized(&self) -> f64 {
        self.y_std.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn predict(&self, u: &[f64]) -> (f64, f64) {
        let ks = DVector::from_iterator(self.x.len(), self.x.iter().map(|xi| matern52(euclid(xi, u), self.length)));
        let mu = ks.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&ks).unwrap_or_else(|| ks.clone());
        (mu, 1.0 - v.dot(&v))
    }
}
