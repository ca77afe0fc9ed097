//! Conventional and dataset-adaptive optimization workflows.
//!
//! The conventional workflow spends the full budget on every technique and
//! keeps the best projection. The adaptive workflow predicts each technique's
//! maximum achievable score from the dataset's complexity features, optimizes
//! only the top-ranked techniques, and stops each search as soon as the
//! prediction is reached.
//!
//! Per-technique search seeds depend only on the run seed and the technique
//! id, so an adaptive search is a prefix of the conventional search for the
//! same technique under the same seed.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::complexity::{complexity_features, FeatureVector, DEFAULT_KS};
use crate::data::{subsample, Dataset};
use crate::drtech::{project, Projection, TechniqueDescriptor, TechniqueRegistry};
use crate::error::{Error, Result};
use crate::optimize::{self, make_threshold_stop, BayesConfig, Method, OptimizationTrace, StopCriterion};
use crate::quality::{evaluate_projection, QualityMetric, SpaceSummary};
use crate::regress::{self, RegressionModel, RegressorKind};
use crate::rng;

pub const STORE_VERSION: u32 = 1;
pub const MIN_CORPUS: usize = 10;
pub const MIN_SURVIVORS: usize = 5;
/// Datasets larger than this are subsampled before any computation.
pub const DEFAULT_MAX_POINTS: usize = 3000;

/// Settings shared by every optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub metric: QualityMetric,
    /// Neighborhood size for the local metrics.
    pub k: usize,
    pub budget: usize,
    pub seed: u64,
    pub n_init: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            metric: QualityMetric::TncF1,
            k: crate::quality::DEFAULT_K,
            budget: optimize::DEFAULT_BUDGET,
            seed: 0,
            n_init: optimize::DEFAULT_N_INIT,
        }
    }
}

impl RunConfig {
    /// Bayesian optimization with the initial design capped at the budget.
    pub fn method(&self) -> Method {
        Method::Bayes(BayesConfig {
            n_init: self.n_init.min(self.budget),
            ..BayesConfig::default()
        })
    }

    /// Same settings with the seed replaced by one derived from the dataset's
    /// contents, so a dataset gets the same seeds wherever it appears.
    pub fn for_dataset(&self, ds: &Dataset) -> Self {
        Self {
            seed: rng::derive_seed(self.seed, &ds.content_hash()),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkflowMode {
    Conventional,
    Adaptive { top_m: usize },
}

impl fmt::Display for WorkflowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Conventional => f.write_str("conventional"),
            Self::Adaptive { top_m } => write!(f, "adaptive-top-{top_m}"),
        }
    }
}

impl FromStr for WorkflowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "conventional" {
            return Ok(Self::Conventional);
        }
        s.strip_prefix("adaptive-top-")
            .and_then(|m| m.parse().ok())
            .map(|top_m| Self::Adaptive { top_m })
            .ok_or_else(|| Error::Parse(format!("bad workflow mode '{s}'")))
    }
}

impl Serialize for WorkflowMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WorkflowMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Outcome of optimizing one technique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechniqueRun {
    pub technique: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_score: Option<f64>,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<OptimizationTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub projection: Option<Projection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowResult {
    pub dataset: String,
    pub mode: WorkflowMode,
    pub metric: QualityMetric,
    pub k: usize,
    pub budget: usize,
    /// Techniques optimized, in rank order for adaptive runs.
    pub chosen: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions: Option<BTreeMap<String, f64>>,
    pub runs: Vec<TechniqueRun>,
    pub final_technique: String,
    pub final_score: f64,
    pub total_trials: usize,
    /// Summed objective evaluation time.
    pub wall_time_s: f64,
    #[serde(skip)]
    pub projection: Option<Projection>,
}

impl WorkflowResult {
    /// Best score over successful runs, recomputed from the traces.
    pub fn recomputed_score(&self) -> f64 {
        self.runs
            .iter()
            .filter_map(|r| r.trace.as_ref())
            .map(OptimizationTrace::best_score)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn technique_seed(seed: u64, technique: &str) -> u64 {
    rng::derive_seed(seed, technique)
}

/// Optimizes a single technique on `ds`. Search failures are reported in the
/// returned run's `error` field.
pub fn optimize_technique(
    ds: &Dataset,
    t: &TechniqueDescriptor,
    cfg: &RunConfig,
    method: Method,
    stop: StopCriterion,
) -> TechniqueRun {
    run_technique(ds, &SpaceSummary::new(ds), t, cfg, method, stop, None)
}

/// Searches one technique's space against `hi`, keeping the best projection
/// seen.
fn run_technique(
    ds: &Dataset,
    hi: &SpaceSummary,
    t: &TechniqueDescriptor,
    cfg: &RunConfig,
    method: Method,
    stop: StopCriterion,
    predicted_max: Option<f64>,
) -> TechniqueRun {
    let seed = technique_seed(cfg.seed, &t.id);
    let mut best: Option<(f64, Projection)> = None;
    let objective = |h: &_, s: u64| -> Result<f64> {
        let p = project(t, ds, h, s)?;
        let score = evaluate_projection(cfg.metric, hi, &p, cfg.k)?.value;
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, p));
        }
        Ok(score)
    };
    let outcome = t
        .hyperparameter_space(ds.n())
        .and_then(|space| optimize::search(method, objective, &space, cfg.budget, seed, stop));
    let mut run = TechniqueRun {
        technique: t.id.clone(),
        seed,
        predicted_max,
        best_score: None,
        trials: 0,
        trace: None,
        error: None,
        projection: None,
    };
    match outcome.and_then(OptimizationTrace::into_result) {
        Ok(trace) => {
            run.best_score = Some(trace.best_score());
            run.trials = trace.len();
            run.trace = Some(trace);
            run.projection = best.map(|b| b.1);
        }
        Err(e) => {
            log::warn!("{} on {}: {e}", t.id, ds.name());
            if let Error::Objective { trials, .. } = e {
                run.trials = trials;
            }
            run.error = Some(e.to_string());
        }
    }
    run
}

fn assemble(
    ds: &Dataset,
    mode: WorkflowMode,
    cfg: &RunConfig,
    runs: Vec<TechniqueRun>,
    features: Option<FeatureVector>,
    predictions: Option<BTreeMap<String, f64>>,
) -> Result<WorkflowResult> {
    // first run attaining the maximum wins ties
    let winner = runs
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.best_score.map(|s| (i, s)))
        .fold(None, |acc: Option<(usize, f64)>, (i, s)| match acc {
            Some((_, b)) if b >= s => acc,
            _ => Some((i, s)),
        });
    let Some((wi, final_score)) = winner else {
        let reasons: Vec<String> = runs
            .iter()
            .map(|r| format!("{}: {}", r.technique, r.error.as_deref().unwrap_or("no result")))
            .collect();
        return Err(Error::Workflow(format!(
            "every selected technique failed on {} ({})",
            ds.name(),
            reasons.join("; ")
        )));
    };
    Ok(WorkflowResult {
        dataset: ds.name().to_string(),
        mode,
        metric: cfg.metric,
        k: cfg.k,
        budget: cfg.budget,
        chosen: runs.iter().map(|r| r.technique.clone()).collect(),
        features,
        predictions,
        final_technique: runs[wi].technique.clone(),
        final_score,
        total_trials: runs.iter().map(|r| r.trials).sum(),
        wall_time_s: runs
            .iter()
            .filter_map(|r| r.trace.as_ref())
            .map(OptimizationTrace::wall_time_s)
            .sum(),
        projection: runs[wi].projection.clone(),
        runs,
    })
}

fn check_config(cfg: &RunConfig, ds: &Dataset) -> Result<()> {
    if cfg.budget == 0 {
        return Err(Error::validation("budget must be at least 1"));
    }
    if cfg.k == 0 || cfg.k >= ds.n() {
        return Err(Error::validation(format!(
            "evaluation k={} must be in [1, N-1] for N={}",
            cfg.k,
            ds.n()
        )));
    }
    Ok(())
}

/// Full-budget optimization of every technique; techniques run in parallel.
pub fn conventional_optimize(ds: &Dataset, techniques: &[TechniqueDescriptor], cfg: &RunConfig) -> Result<WorkflowResult> {
    if techniques.is_empty() {
        return Err(Error::validation("no techniques to optimize"));
    }
    check_config(cfg, ds)?;
    let hi = SpaceSummary::new(ds);
    let runs: Vec<TechniqueRun> = techniques
        .par_iter()
        .map(|t| run_technique(ds, &hi, t, cfg, cfg.method(), StopCriterion::None, None))
        .collect();
    assemble(ds, WorkflowMode::Conventional, cfg, runs, None, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPoint {
    pub dataset: String,
    pub features: Vec<f64>,
    pub target: f64,
    pub fitted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub model: RegressionModel,
    pub training: Vec<TrainingPoint>,
    /// Largest absolute training residual.
    pub max_abs_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreManifest {
    /// SHA-256 over the training datasets' content hashes, in corpus order.
    pub corpus_hash: String,
    pub datasets: Vec<String>,
    pub ks: Vec<usize>,
    pub feature_arity: usize,
    pub metric: QualityMetric,
    pub k: usize,
    pub budget: usize,
    pub seed: u64,
    pub n_init: usize,
    pub regressor: RegressorKind,
    pub techniques: Vec<String>,
}

/// Regression models keyed by technique id, then metric id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStore {
    pub schema: String,
    pub version: u32,
    pub manifest: StoreManifest,
    pub models: BTreeMap<String, BTreeMap<String, ModelRecord>>,
}

impl ModelStore {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let store: Self =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("model store {}: {e}", path.display())))?;
        if store.schema != crate::SCHEMA || store.version != STORE_VERSION {
            return Err(Error::Parse(format!(
                "model store {} has schema {} v{}, expected {} v{STORE_VERSION}",
                path.display(),
                store.schema,
                store.version,
                crate::SCHEMA
            )));
        }
        Ok(store)
    }

    /// Technique ids with a model for the manifest metric.
    pub fn techniques(&self) -> Vec<String> {
        let metric = self.manifest.metric.id();
        self.models
            .iter()
            .filter(|(_, m)| m.contains_key(metric))
            .map(|(t, _)| t.clone())
            .collect()
    }

    fn record(&self, technique: &str) -> Option<&ModelRecord> {
        self.models.get(technique)?.get(self.manifest.metric.id())
    }
}

/// Per-dataset ground truth: complexity features and the best score each
/// technique reached under a full-budget search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub dataset: String,
    pub content_hash: String,
    pub features: FeatureVector,
    pub scores: BTreeMap<String, f64>,
    pub conventional: WorkflowResult,
    #[serde(skip)]
    pub data: Option<Dataset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub run: RunConfig,
    pub ks: Vec<usize>,
    pub regressor: RegressorKind,
    pub max_points: usize,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            run: RunConfig::default(),
            ks: DEFAULT_KS.to_vec(),
            regressor: RegressorKind::RandomForest,
            max_points: DEFAULT_MAX_POINTS,
        }
    }
}

/// Subsamples (if needed), computes features, and runs the conventional
/// workflow on every dataset. Failing datasets are logged and skipped.
pub fn compute_ground_truth(
    corpus: &[Dataset],
    techniques: &[TechniqueDescriptor],
    cfg: &PretrainConfig,
) -> Vec<GroundTruth> {
    corpus
        .iter()
        .filter_map(|ds| match ground_truth_one(ds, techniques, cfg) {
            Ok(gt) => Some(gt),
            Err(e) => {
                log::warn!("skipping dataset {}: {e}", ds.name());
                None
            }
        })
        .collect()
}

fn ground_truth_one(ds: &Dataset, techniques: &[TechniqueDescriptor], cfg: &PretrainConfig) -> Result<GroundTruth> {
    let ds = subsample(ds, cfg.max_points, rng::derive_seed(cfg.run.seed, "subsample"))?;
    let features = complexity_features(&ds, &cfg.ks)?;
    let conventional = conventional_optimize(&ds, techniques, &cfg.run.for_dataset(&ds))?;
    let scores = conventional
        .runs
        .iter()
        .filter_map(|r| r.best_score.map(|s| (r.technique.clone(), s)))
        .collect();
    log::info!("ground truth for {}: {:?}", ds.name(), scores);
    Ok(GroundTruth {
        dataset: ds.name().to_string(),
        content_hash: ds.content_hash(),
        features,
        scores,
        conventional,
        data: Some(ds),
    })
}

/// Fits one regressor per technique on ground-truth rows.
pub fn fit_store(truth: &[&GroundTruth], techniques: &[String], cfg: &PretrainConfig) -> Result<ModelStore> {
    if truth.len() < MIN_SURVIVORS {
        return Err(Error::Pretrain(format!(
            "only {} datasets survived; at least {MIN_SURVIVORS} are required",
            truth.len()
        )));
    }
    let mut hasher = Sha256::new();
    for gt in truth {
        hasher.update(gt.content_hash.as_bytes());
    }
    let corpus_hash: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    let feature_arity = truth[0].features.len();

    let mut models = BTreeMap::new();
    for t in techniques {
        let rows: Vec<(&GroundTruth, f64)> = truth
            .iter()
            .filter_map(|gt| gt.scores.get(t).map(|&s| (*gt, s)))
            .collect();
        if rows.len() < MIN_SURVIVORS {
            log::warn!("technique {t}: only {} datasets with a score; no model", rows.len());
            continue;
        }
        let x: Vec<Vec<f64>> = rows.iter().map(|(gt, _)| gt.features.values()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let model = regress::fit(cfg.regressor, &x, &y, rng::derive_seed(cfg.run.seed, t))?;
        let training: Vec<TrainingPoint> = rows
            .iter()
            .zip(&x)
            .map(|((gt, target), f)| {
                Ok(TrainingPoint {
                    dataset: gt.dataset.clone(),
                    features: f.clone(),
                    target: *target,
                    fitted: model.predict(f)?,
                })
            })
            .collect::<Result<_>>()?;
        let max_abs_residual = training.iter().map(|p| (p.target - p.fitted).abs()).fold(0.0, f64::max);
        let mut per_metric = BTreeMap::new();
        per_metric.insert(
            cfg.run.metric.id().to_string(),
            ModelRecord {
                model,
                training,
                max_abs_residual,
            },
        );
        models.insert(t.clone(), per_metric);
    }
    if models.is_empty() {
        return Err(Error::Pretrain("no technique had enough successful datasets".into()));
    }
    Ok(ModelStore {
        schema: crate::SCHEMA.to_string(),
        version: STORE_VERSION,
        manifest: StoreManifest {
            corpus_hash,
            datasets: truth.iter().map(|gt| gt.dataset.clone()).collect(),
            ks: cfg.ks.clone(),
            feature_arity,
            metric: cfg.run.metric,
            k: cfg.run.k,
            budget: cfg.run.budget,
            seed: cfg.run.seed,
            n_init: cfg.run.n_init,
            regressor: cfg.regressor,
            techniques: models.keys().cloned().collect(),
        },
        models,
    })
}

/// Ground truth for every dataset, then one regression model per technique.
pub fn pretrain(corpus: &[Dataset], techniques: &[TechniqueDescriptor], cfg: &PretrainConfig) -> Result<ModelStore> {
    if corpus.len() < MIN_CORPUS {
        return Err(Error::Pretrain(format!(
            "corpus has {} datasets; at least {MIN_CORPUS} are required",
            corpus.len()
        )));
    }
    if techniques.is_empty() {
        return Err(Error::Pretrain("no techniques selected".into()));
    }
    let truth = compute_ground_truth(corpus, techniques, cfg);
    let refs: Vec<&GroundTruth> = truth.iter().collect();
    let ids: Vec<String> = techniques.iter().map(|t| t.id.clone()).collect();
    fit_store(&refs, &ids, cfg)
}

/// Predicted maximum score per stored technique, clamped to the metric range.
pub fn predict_max_accuracy(store: &ModelStore, features: &FeatureVector) -> Result<BTreeMap<String, f64>> {
    if features.ks() != store.manifest.ks {
        return Err(Error::validation(format!(
            "feature vector uses ks {:?}, store expects {:?}",
            features.ks(),
            store.manifest.ks
        )));
    }
    let x = features.values();
    let metric = store.manifest.metric;
    store
        .techniques()
        .into_iter()
        .map(|t| {
            let rec = store.record(&t).expect("listed technique has a record");
            Ok((t, metric.clamp(rec.model.predict(&x)?)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub top_m: usize,
    pub budget: usize,
    pub seed: u64,
    /// Multiplier on the predicted maximum giving the stop threshold.
    pub threshold_fraction: f64,
    pub n_init: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            top_m: 1,
            budget: optimize::DEFAULT_BUDGET,
            seed: 0,
            threshold_fraction: 1.0,
            n_init: optimize::DEFAULT_N_INIT,
        }
    }
}

/// Techniques sorted by predicted maximum, best first; ties by id.
pub fn rank_techniques(predictions: &BTreeMap<String, f64>) -> Vec<(String, f64)> {
    let mut ranked: Vec<(String, f64)> = predictions.iter().map(|(t, &p)| (t.clone(), p)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

/// Optimizes the `top_m` techniques with the highest predicted maximum, each
/// stopped once it reaches `threshold_fraction` times its prediction.
pub fn adaptive_optimize(
    ds: &Dataset,
    store: &ModelStore,
    registry: &TechniqueRegistry,
    cfg: &AdaptiveConfig,
) -> Result<WorkflowResult> {
    let available = store.techniques();
    if available.is_empty() {
        return Err(Error::validation("model store holds no models"));
    }
    if cfg.top_m == 0 || cfg.top_m > available.len() {
        return Err(Error::validation(format!(
            "top_m must be in [1, {}], got {}",
            available.len(),
            cfg.top_m
        )));
    }
    if !(cfg.threshold_fraction.is_finite() && cfg.threshold_fraction > 0.0) {
        return Err(Error::validation("threshold fraction must be positive"));
    }
    let run_cfg = RunConfig {
        metric: store.manifest.metric,
        k: store.manifest.k,
        budget: cfg.budget,
        seed: cfg.seed,
        n_init: cfg.n_init,
    };
    check_config(&run_cfg, ds)?;
    let features = complexity_features(ds, &store.manifest.ks)?;
    let predictions = predict_max_accuracy(store, &features)?;
    let chosen: Vec<(TechniqueDescriptor, f64)> = rank_techniques(&predictions)
        .into_iter()
        .take(cfg.top_m)
        .map(|(t, p)| Ok((registry.get(&t)?.clone(), p)))
        .collect::<Result<_>>()?;
    let hi = SpaceSummary::new(ds);
    let runs: Vec<TechniqueRun> = chosen
        .par_iter()
        .map(|(t, p)| match make_threshold_stop(cfg.threshold_fraction * p) {
            Ok(stop) => run_technique(ds, &hi, t, &run_cfg, run_cfg.method(), stop, Some(*p)),
            Err(e) => TechniqueRun {
                technique: t.id.clone(),
                seed: technique_seed(run_cfg.seed, &t.id),
                predicted_max: Some(*p),
                best_score: None,
                trials: 0,
                trace: None,
                error: Some(e.to_string()),
                projection: None,
            },
        })
        .collect();
    assemble(
        ds,
        WorkflowMode::Adaptive { top_m: cfg.top_m },
        &run_cfg,
        runs,
        Some(features),
        Some(predictions),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub dataset: String,
    pub metric: QualityMetric,
    /// Adaptive final score minus conventional final score.
    pub accuracy_delta: f64,
    pub wall_time_ratio: Option<f64>,
    pub trial_count_ratio: f64,
    pub adaptive: WorkflowResult,
    pub conventional: WorkflowResult,
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    if b > 0.0 {
        Some(a / b)
    } else if a == 0.0 {
        Some(1.0)
    } else {
        None
    }
}

pub fn compare(adaptive: &WorkflowResult, conventional: &WorkflowResult) -> Result<Report> {
    if adaptive.metric != conventional.metric || adaptive.k != conventional.k {
        return Err(Error::validation(format!(
            "cannot compare {}@{} with {}@{}",
            adaptive.metric, adaptive.k, conventional.metric, conventional.k
        )));
    }
    if adaptive.dataset != conventional.dataset {
        return Err(Error::validation(format!(
            "results are for different datasets ({} vs {})",
            adaptive.dataset, conventional.dataset
        )));
    }
    Ok(Report {
        schema: crate::SCHEMA.to_string(),
        dataset: adaptive.dataset.clone(),
        metric: adaptive.metric,
        accuracy_delta: adaptive.final_score - conventional.final_score,
        wall_time_ratio: ratio(adaptive.wall_time_s, conventional.wall_time_s),
        trial_count_ratio: ratio(adaptive.total_trials as f64, conventional.total_trials as f64).unwrap_or(1.0),
        adaptive: adaptive.clone(),
        conventional: conventional.clone(),
    })
}

/// Shuffled train/test split; the test side gets `round(n * test_fraction)`
/// items, at least one. Both sides are returned in ascending order.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::validation("test fraction must be in (0, 1)"));
    }
    let n_test = ((n as f64 * test_fraction).round() as usize).max(1);
    if n_test >= n {
        return Err(Error::validation(format!("cannot split {n} items with test fraction {test_fraction}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechniqueFit {
    pub r2: f64,
    pub mae: f64,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionEval {
    pub per_technique: BTreeMap<String, TechniqueFit>,
    /// Mean of per-technique held-out R².
    pub mean_r2: f64,
    /// Mean absolute error over every (technique, test dataset) pair.
    pub mae: f64,
}

/// Held-out accuracy of a store's models on ground-truth rows.
pub fn evaluate_store(store: &ModelStore, test: &[&GroundTruth]) -> Result<RegressionEval> {
    let mut per_technique = BTreeMap::new();
    let (mut abs_sum, mut count) = (0.0, 0usize);
    for t in store.techniques() {
        let rec = store.record(&t).expect("listed technique has a record");
        let mut truth = Vec::new();
        let mut pred = Vec::new();
        for gt in test {
            if let Some(&s) = gt.scores.get(&t) {
                truth.push(s);
                pred.push(store.manifest.metric.clamp(rec.model.predict(&gt.features.values())?));
            }
        }
        if truth.is_empty() {
            continue;
        }
        let abs: f64 = truth.iter().zip(&pred).map(|(a, b)| (a - b).abs()).sum();
        abs_sum += abs;
        count += truth.len();
        per_technique.insert(
            t,
            TechniqueFit {
                r2: regress::r2_score(&truth, &pred),
                mae: abs / truth.len() as f64,
                n_test: truth.len(),
            },
        );
    }
    if count == 0 {
        return Err(Error::validation("no test rows to evaluate"));
    }
    let mean_r2 = per_technique.values().map(|f| f.r2).sum::<f64>() / per_technique.len() as f64;
    Ok(RegressionEval {
        per_technique,
        mean_r2,
        mae: abs_sum / count as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub pretrain: PretrainConfig,
    pub top_ms: Vec<usize>,
    pub test_fraction: f64,
    pub threshold_fraction: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            pretrain: PretrainConfig::default(),
            top_ms: vec![1, 3],
            test_fraction: 0.2,
            threshold_fraction: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub dataset: String,
    pub mode: WorkflowMode,
    pub techniques: Vec<String>,
    pub final_technique: String,
    pub final_score: f64,
    pub total_trials: usize,
    pub wall_time_s: f64,
    pub accuracy_delta: f64,
    pub trial_count_ratio: f64,
    pub wall_time_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: WorkflowMode,
    pub mean_accuracy_delta: f64,
    pub mean_trial_count_ratio: f64,
    pub mean_wall_time_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema: String,
    pub config: BenchmarkConfig,
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub skipped: Vec<String>,
    pub regression: RegressionEval,
    pub rows: Vec<BenchmarkRow>,
    pub summary: Vec<ModeSummary>,
}

impl BenchmarkReport {
    /// Flat CSV table, one line per (dataset, mode).
    pub fn write_csv<W: std::io::Write>(&self, w: W, timings: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![
            "dataset",
            "mode",
            "techniques",
            "final_technique",
            "final_score",
            "total_trials",
            "accuracy_delta",
            "trial_count_ratio",
        ];
        if timings {
            header.extend(["wall_time_s", "wall_time_ratio"]);
        }
        out.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![
                r.dataset.clone(),
                r.mode.to_string(),
                r.techniques.join(";"),
                r.final_technique.clone(),
                r.final_score.to_string(),
                r.total_trials.to_string(),
                r.accuracy_delta.to_string(),
                r.trial_count_ratio.to_string(),
            ];
            if timings {
                rec.push(r.wall_time_s.to_string());
                rec.push(r.wall_time_ratio.map(|v| v.to_string()).unwrap_or_default());
            }
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn row_for(result: &WorkflowResult, conventional: &WorkflowResult) -> Result<BenchmarkRow> {
    let rep = compare(result, conventional)?;
    Ok(BenchmarkRow {
        dataset: result.dataset.clone(),
        mode: result.mode,
        techniques: result.chosen.clone(),
        final_technique: result.final_technique.clone(),
        final_score: result.final_score,
        total_trials: result.total_trials,
        wall_time_s: result.wall_time_s,
        accuracy_delta: rep.accuracy_delta,
        trial_count_ratio: rep.trial_count_ratio,
        wall_time_ratio: rep.wall_time_ratio,
    })
}

/// End-to-end comparison: ground truth on the whole corpus, pretraining on
/// the training split, then every adaptive mode against the conventional
/// run on each test dataset.
pub fn benchmark(
    corpus: &[Dataset],
    registry: &TechniqueRegistry,
    techniques: &[TechniqueDescriptor],
    cfg: &BenchmarkConfig,
) -> Result<BenchmarkReport> {
    if corpus.len() < MIN_CORPUS {
        return Err(Error::Pretrain(format!(
            "corpus has {} datasets; at least {MIN_CORPUS} are required",
            corpus.len()
        )));
    }
    let ids: Vec<String> = techniques.iter().map(|t| t.id.clone()).collect();
    let truth = compute_ground_truth(corpus, techniques, &cfg.pretrain);
    let skipped: Vec<String> = corpus
        .iter()
        .map(|d| d.name().to_string())
        .filter(|n| !truth.iter().any(|gt| &gt.dataset == n))
        .collect();
    let (train_idx, test_idx) =
        split_indices(truth.len(), cfg.test_fraction, rng::derive_seed(cfg.pretrain.run.seed, "split"))?;
    let train: Vec<&GroundTruth> = train_idx.iter().map(|&i| &truth[i]).collect();
    let test: Vec<&GroundTruth> = test_idx.iter().map(|&i| &truth[i]).collect();
    let store = fit_store(&train, &ids, &cfg.pretrain)?;
    let regression = evaluate_store(&store, &test)?;

    let mut rows = Vec::new();
    for gt in &test {
        let ds = gt.data.as_ref().expect("ground truth keeps its dataset");
        let conventional = &gt.conventional;
        rows.push(row_for(conventional, conventional)?);
        for &m in &cfg.top_ms {
            let acfg = AdaptiveConfig {
                top_m: m.min(store.techniques().len()),
                budget: cfg.pretrain.run.budget,
                seed: cfg.pretrain.run.for_dataset(ds).seed,
                threshold_fraction: cfg.threshold_fraction,
                n_init: cfg.pretrain.run.n_init,
            };
            let adaptive = adaptive_optimize(ds, &store, registry, &acfg)?;
            rows.push(row_for(&adaptive, conventional)?);
        }
    }
    let mut summary = Vec::new();
    for &m in &cfg.top_ms {
        let mode = WorkflowMode::Adaptive {
            top_m: m.min(store.techniques().len()),
        };
        let sel: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.mode == mode).collect();
        let n = sel.len() as f64;
        let walls: Vec<f64> = sel.iter().filter_map(|r| r.wall_time_ratio).collect();
        summary.push(ModeSummary {
            mode,
            mean_accuracy_delta: sel.iter().map(|r| r.accuracy_delta).sum::<f64>() / n,
            mean_trial_count_ratio: sel.iter().map(|r| r.trial_count_ratio).sum::<f64>() / n,
            mean_wall_time_ratio: (walls.len() == sel.len()).then(|| walls.iter().sum::<f64>() / n),
        });
    }
    Ok(BenchmarkReport {
        schema: crate::SCHEMA.to_string(),
        config: cfg.clone(),
        train: train.iter().map(|g| g.dataset.clone()).collect(),
        test: test.iter().map(|g| g.dataset.clone()).collect(),
        skipped,
        regression,
        rows,
        summary,
    })
}
