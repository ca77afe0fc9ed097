use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use dradapt::complexity::{complexity_features, FeatureVector, DEFAULT_KS};
use dradapt::data::{
    generate_synthetic, load_corpus, load_dataset, subsample, synthetic_corpus, write_dataset, Dataset, LabelColumn,
    LoadOptions, ManifestEntry, SyntheticKind, SyntheticSpec,
};
use dradapt::drtech::space::{HyperparamAssignment, HyperparamSpace};
use dradapt::drtech::{project, TechniqueDescriptor, TechniqueKind, TechniqueRegistry};
use dradapt::optimize::{make_threshold_stop, write_trace_jsonl, BayesConfig, Method, StopCriterion};
use dradapt::quality::{evaluate, evaluate_projection, QualityMetric, QualityScore, SpaceSummary};
use dradapt::regress::{cross_validate, CvReport, RegressorKind};
use dradapt::workflow::{
    adaptive_optimize, benchmark, conventional_optimize, optimize_technique, predict_max_accuracy, pretrain,
    rank_techniques, AdaptiveConfig, BenchmarkConfig, ModelStore, PretrainConfig, RunConfig, TechniqueRun,
    WorkflowResult, DEFAULT_MAX_POINTS,
};
use dradapt::{rng, Error, Result};

use crate::output::{emit_csv, emit_json, enum_str, opt_f64};
use crate::{Cli, Command, GlobalArgs};

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Dataset CSV (numeric, no header unless --header).
    pub dataset: PathBuf,
    #[command(flatten)]
    pub format: FormatArgs,
    /// Z-score every column before use.
    #[arg(long)]
    pub standardize: bool,
    /// Subsample larger datasets to this many points.
    #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
    pub max_points: usize,
}

#[derive(Debug, Args)]
pub struct FormatArgs {
    /// First CSV row is a header.
    #[arg(long)]
    pub header: bool,
    /// Field delimiter.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Column holding labels: `last`, a 0-based index, or a header name.
    #[arg(long)]
    pub label_column: Option<String>,
}

impl FormatArgs {
    fn options(&self) -> Result<LoadOptions> {
        if !self.delimiter.is_ascii() {
            return Err(Error::Validation("delimiter must be an ASCII character".into()));
        }
        Ok(LoadOptions {
            delimiter: self.delimiter as u8,
            has_header: self.header,
            label_column: self.label_column.as_deref().map(str::parse::<LabelColumn>).transpose()?,
        })
    }
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    /// Quality metric: tnc, mrre, spearman or pearson.
    #[arg(long, default_value = "tnc")]
    pub metric: String,
    /// Neighborhood size for local metrics.
    #[arg(long, default_value_t = dradapt::quality::DEFAULT_K)]
    pub k: usize,
}

impl MetricArgs {
    fn metric(&self) -> Result<QualityMetric> {
        self.metric.parse()
    }
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Objective evaluations per technique.
    #[arg(long, default_value_t = dradapt::optimize::DEFAULT_BUDGET)]
    pub budget: usize,
    /// Random trials before the surrogate takes over.
    #[arg(long, default_value_t = dradapt::optimize::DEFAULT_N_INIT)]
    pub n_init: usize,
}

#[derive(Debug, Args)]
pub struct TechniqueArgs {
    /// Comma-separated technique ids (default: every registered technique).
    #[arg(long, value_delimiter = ',')]
    pub techniques: Option<Vec<String>>,
    /// JSON file registering external techniques.
    #[arg(long)]
    pub plugins: Option<PathBuf>,
}

impl TechniqueArgs {
    fn registry(&self) -> Result<TechniqueRegistry> {
        registry(self.plugins.as_deref())
    }

    fn selected(&self, reg: &TechniqueRegistry) -> Result<Vec<TechniqueDescriptor>> {
        match &self.techniques {
            Some(ids) => reg.select(ids),
            None => Ok(reg.list().to_vec()),
        }
    }
}

fn registry(plugins: Option<&Path>) -> Result<TechniqueRegistry> {
    let mut reg = TechniqueRegistry::new();
    if let Some(p) = plugins {
        reg.load_plugins(p)?;
    }
    Ok(reg)
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// MNC neighborhood sizes.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS)]
    pub k: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Source (high-dimensional) data.
    #[arg(long)]
    pub hi: PathBuf,
    /// Projection to score.
    #[arg(long)]
    pub lo: PathBuf,
    #[command(flatten)]
    pub format: FormatArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub technique: String,
    /// Hyperparameters as a JSON object; missing ones take defaults.
    #[arg(long, default_value = "{}")]
    pub params: String,
    /// Projection CSV path; without it the projection is printed to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long)]
    pub plugins: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SearchMethod {
    Bayes,
    Random,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub technique: String,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, value_enum, default_value_t = SearchMethod::Bayes)]
    pub method: SearchMethod,
    /// Stop as soon as a trial reaches this score.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Write the trace as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the best projection as CSV.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub plugins: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus manifest: JSON array of {name, path, label_column}.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Dataset files have a header row.
    #[arg(long)]
    pub header: bool,
    /// Z-score every column of every dataset.
    #[arg(long)]
    pub standardize: bool,
    /// Subsample larger datasets to this many points.
    #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
    pub max_points: usize,
}

impl CorpusArgs {
    fn load(&self) -> Result<Vec<Dataset>> {
        let corpus = load_corpus(&self.corpus, self.header).map_err(|e| input_error(&self.corpus, e))?;
        Ok(if self.standardize {
            corpus.iter().map(Dataset::standardized).collect()
        } else {
            corpus
        })
    }
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub techniques: TechniqueArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Regressor: linear, polynomial2, knn or random-forest.
    #[arg(long, default_value = "random-forest")]
    pub regressor: String,
    /// MNC neighborhood sizes of the feature vector.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS)]
    pub ks: Vec<usize>,
    /// Where to write the model store.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub store: PathBuf,
}

#[derive(Debug, Args)]
pub struct AdaptiveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub store: PathBuf,
    /// Number of top-ranked techniques to optimize.
    #[arg(long, default_value_t = 1)]
    pub top_m: usize,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Stop threshold as a fraction of the predicted maximum.
    #[arg(long, default_value_t = 1.0)]
    pub threshold_fraction: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub plugins: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConventionalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub techniques: TechniqueArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub techniques: TechniqueArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value = "random-forest")]
    pub regressor: String,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS)]
    pub ks: Vec<usize>,
    /// Adaptive variants to compare, as top-m values.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 3])]
    pub top_m: Vec<usize>,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    pub threshold_fraction: f64,
}

#[derive(Debug, Args)]
pub struct TechniquesArgs {
    /// Dataset size used to resolve size-dependent bounds.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long)]
    pub plugins: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// iid-gaussian, iid-uniform, gaussian-mixture, swiss-roll or hyperplane-embedded.
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    /// Kind-specific parameter, `name=value`; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Output CSV; labels (if any) go in the last column.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateCorpusArgs {
    #[arg(long, default_value_t = 40)]
    pub count: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Directory receiving the CSV files and manifest.json.
    #[arg(long)]
    pub dir: PathBuf,
}

/// Missing or unreadable input files are the caller's fault.
fn input_error(path: &Path, e: Error) -> Error {
    match e {
        Error::Io(io) => Error::Validation(format!("cannot read {}: {io}", path.display())),
        other => other,
    }
}

fn load(path: &Path, format: &FormatArgs) -> Result<Dataset> {
    load_dataset(path, &format.options()?).map_err(|e| input_error(path, e))
}

fn load_input(input: &InputArgs, seed: u64) -> Result<Dataset> {
    let ds = load(&input.dataset, &input.format)?;
    let ds = if input.standardize { ds.standardized() } else { ds };
    if input.max_points < 3 {
        return Err(Error::Validation("--max-points must be at least 3".into()));
    }
    if ds.n() > input.max_points {
        log::info!("subsampling {} from {} to {} points", ds.name(), ds.n(), input.max_points);
    }
    subsample(&ds, input.max_points, rng::derive_seed(seed, "subsample"))
}

fn check_budget(search: &SearchArgs) -> Result<()> {
    if search.budget == 0 {
        return Err(Error::Validation("--budget must be at least 1".into()));
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Complexity(a) => cmd_complexity(a, g),
        Command::Evaluate(a) => cmd_evaluate(a, g),
        Command::Project(a) => cmd_project(a, g),
        Command::Optimize(a) => cmd_optimize(a, g),
        Command::Pretrain(a) => cmd_pretrain(a, g),
        Command::Predict(a) => cmd_predict(a, g),
        Command::AdaptiveRun(a) => cmd_adaptive(a, g),
        Command::ConventionalRun(a) => cmd_conventional(a, g),
        Command::Benchmark(a) => cmd_benchmark(a, g),
        Command::Techniques(a) => cmd_techniques(a, g),
        Command::Generate(a) => cmd_generate(a, g),
        Command::GenerateCorpus(a) => cmd_generate_corpus(a, g),
    }
}

fn features_csv(features: &FeatureVector) -> Vec<Vec<String>> {
    features
        .0
        .iter()
        .map(|s| vec![s.metric.to_string(), s.k.map(|k| k.to_string()).unwrap_or_default(), s.value.to_string()])
        .collect()
}

#[derive(Serialize)]
struct ComplexityReport<'a> {
    dataset: &'a str,
    n: usize,
    d: usize,
    features: &'a FeatureVector,
}

fn cmd_complexity(a: &ComplexityArgs, g: &GlobalArgs) -> Result<()> {
    let ds = load_input(&a.input, g.seed)?;
    if a.k.is_empty() || a.k.contains(&0) {
        return Err(Error::Validation("--k needs positive neighborhood sizes".into()));
    }
    let ks: Vec<usize> = a
        .k
        .iter()
        .map(|&k| {
            if k >= ds.n() {
                log::warn!("k={k} exceeds N-1 for N={}; using {}", ds.n(), ds.n() - 1);
                ds.n() - 1
            } else {
                k
            }
        })
        .collect();
    let features = complexity_features(&ds, &ks)?;
    if g.csv {
        return emit_csv(&["metric", "k", "value"], &features_csv(&features));
    }
    emit_json(
        &ComplexityReport {
            dataset: ds.name(),
            n: ds.n(),
            d: ds.d(),
            features: &features,
        },
        g,
    )
}

#[derive(Serialize)]
struct EvaluateReport<'a> {
    hi: &'a str,
    lo: &'a str,
    #[serde(flatten)]
    score: QualityScore,
}

fn score_csv(s: &QualityScore) -> Vec<String> {
    vec![s.metric.to_string(), s.k.map(|k| k.to_string()).unwrap_or_default(), s.value.to_string()]
}

fn cmd_evaluate(a: &EvaluateArgs, g: &GlobalArgs) -> Result<()> {
    let hi = load(&a.hi, &a.format)?;
    let lo = load(&a.lo, &a.format)?;
    if hi.n() != lo.n() {
        return Err(Error::Validation(format!(
            "--hi has {} points but --lo has {}",
            hi.n(),
            lo.n()
        )));
    }
    let score = evaluate(a.metric.metric()?, &SpaceSummary::new(&hi), &SpaceSummary::new(&lo), a.metric.k)?;
    if g.csv {
        return emit_csv(&["metric", "k", "value"], &[score_csv(&score)]);
    }
    emit_json(
        &EvaluateReport {
            hi: hi.name(),
            lo: lo.name(),
            score,
        },
        g,
    )
}

fn parse_params(text: &str) -> Result<HyperparamAssignment> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("--params: {e}")))
}

#[derive(Serialize)]
struct ProjectReport<'a> {
    dataset: &'a str,
    technique: &'a str,
    hyperparameters: &'a HyperparamAssignment,
    seed: u64,
    n: usize,
    output: String,
    score: QualityScore,
}

fn cmd_project(a: &ProjectArgs, g: &GlobalArgs) -> Result<()> {
    let ds = load_input(&a.input, g.seed)?;
    let reg = registry(a.plugins.as_deref())?;
    let t = reg.get(&a.technique)?;
    let space = t.hyperparameter_space(ds.n())?;
    let h = space.complete(&parse_params(&a.params)?, &t.defaults());
    let proj = project(t, &ds, &h, g.seed)?;
    let Some(out) = &a.output else {
        return proj.write_csv(std::io::stdout().lock());
    };
    proj.write_csv(std::io::BufWriter::new(std::fs::File::create(out)?))?;
    let score = evaluate_projection(a.metric.metric()?, &SpaceSummary::new(&ds), &proj, a.metric.k)?;
    if g.csv {
        return emit_csv(&["technique", "metric", "k", "value"], &[{
            let mut r = vec![t.id.clone()];
            r.extend(score_csv(&score));
            r
        }]);
    }
    emit_json(
        &ProjectReport {
            dataset: ds.name(),
            technique: &t.id,
            hyperparameters: &h,
            seed: g.seed,
            n: ds.n(),
            output: out.display().to_string(),
            score,
        },
        g,
    )
}

fn run_config(metric: &MetricArgs, search: &SearchArgs, seed: u64) -> Result<RunConfig> {
    check_budget(search)?;
    Ok(RunConfig {
        metric: metric.metric()?,
        k: metric.k,
        budget: search.budget,
        seed,
        n_init: search.n_init,
    })
}

fn write_projection(run_projection: Option<&dradapt::drtech::Projection>, path: Option<&PathBuf>) -> Result<()> {
    if let (Some(p), Some(path)) = (run_projection, path) {
        p.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct OptimizeReport<'a> {
    dataset: &'a str,
    metric: QualityMetric,
    k: usize,
    method: &'a str,
    budget: usize,
    #[serde(flatten)]
    run: &'a TechniqueRun,
}

fn cmd_optimize(a: &OptimizeArgs, g: &GlobalArgs) -> Result<()> {
    let ds = load_input(&a.input, g.seed)?;
    let reg = registry(a.plugins.as_deref())?;
    let t = reg.get(&a.technique)?;
    let cfg = run_config(&a.metric, &a.search, g.seed)?;
    let method = match a.method {
        SearchMethod::Bayes => {
            if a.search.n_init == 0 || a.search.n_init > a.search.budget {
                return Err(Error::Validation(format!(
                    "--n-init must be in [1, budget={}], got {}",
                    a.search.budget, a.search.n_init
                )));
            }
            Method::Bayes(BayesConfig {
                n_init: a.search.n_init,
                ..BayesConfig::default()
            })
        }
        SearchMethod::Random => Method::Random,
    };
    let stop = match a.threshold {
        Some(th) => make_threshold_stop(th)?,
        None => StopCriterion::None,
    };
    let run = optimize_technique(&ds, t, &cfg, method, stop);
    if let Some(e) = &run.error {
        return Err(if run.trials > 0 {
            Error::Objective {
                trials: run.trials,
                last: e.clone(),
            }
        } else {
            Error::Validation(e.clone())
        });
    }
    if let (Some(path), Some(trace)) = (&a.trace, &run.trace) {
        write_trace_jsonl(trace, std::io::BufWriter::new(std::fs::File::create(path)?), g.timings)?;
    }
    write_projection(run.projection.as_ref(), a.output.as_ref())?;
    if g.csv {
        let rows: Vec<Vec<String>> = run
            .trace
            .iter()
            .flat_map(|tr| &tr.trials)
            .map(|t| {
                vec![
                    t.index.to_string(),
                    t.assignment.to_string(),
                    if t.score.is_finite() { t.score.to_string() } else { String::new() },
                    t.cached.to_string(),
                    t.error.clone().unwrap_or_default(),
                ]
            })
            .collect();
        return emit_csv(&["trial", "assignment", "score", "cached", "error"], &rows);
    }
    emit_json(
        &OptimizeReport {
            dataset: ds.name(),
            metric: cfg.metric,
            k: cfg.k,
            method: match a.method {
                SearchMethod::Bayes => "bayes",
                SearchMethod::Random => "random",
            },
            budget: cfg.budget,
            run: &run,
        },
        g,
    )
}

#[derive(Serialize)]
struct TechniqueSummary {
    n_train: usize,
    max_abs_residual: f64,
    cv: Option<CvReport>,
}

#[derive(Serialize)]
struct PretrainReport<'a> {
    output: String,
    manifest: &'a dradapt::workflow::StoreManifest,
    techniques: BTreeMap<String, TechniqueSummary>,
}

fn cmd_pretrain(a: &PretrainArgs, g: &GlobalArgs) -> Result<()> {
    let corpus = a.corpus.load()?;
    let reg = a.techniques.registry()?;
    let techniques = a.techniques.selected(&reg)?;
    let cfg = PretrainConfig {
        run: run_config(&a.metric, &a.search, g.seed)?,
        ks: a.ks.clone(),
        regressor: a.regressor.parse::<RegressorKind>()?,
        max_points: a.corpus.max_points,
    };
    let store = pretrain(&corpus, &techniques, &cfg)?;
    store.save(&a.output)?;

    let metric = store.manifest.metric.id();
    let mut summary = BTreeMap::new();
    for (t, per_metric) in &store.models {
        let Some(rec) = per_metric.get(metric) else { continue };
        let x: Vec<Vec<f64>> = rec.training.iter().map(|p| p.features.clone()).collect();
        let y: Vec<f64> = rec.training.iter().map(|p| p.target).collect();
        let cv = cross_validate(store.manifest.regressor, &x, &y, 5, rng::derive_seed(g.seed, "cv"))
            .map_err(|e| log::warn!("no cross-validation for {t}: {e}"))
            .ok();
        summary.insert(
            t.clone(),
            TechniqueSummary {
                n_train: rec.training.len(),
                max_abs_residual: rec.max_abs_residual,
                cv,
            },
        );
    }
    if g.csv {
        let rows: Vec<Vec<String>> = summary
            .iter()
            .map(|(t, s)| {
                vec![
                    t.clone(),
                    s.n_train.to_string(),
                    s.max_abs_residual.to_string(),
                    opt_f64(s.cv.as_ref().map(|c| c.mean_r2)),
                ]
            })
            .collect();
        return emit_csv(&["technique", "n_train", "max_abs_residual", "cv_mean_r2"], &rows);
    }
    emit_json(
        &PretrainReport {
            output: a.output.display().to_string(),
            manifest: &store.manifest,
            techniques: summary,
        },
        g,
    )
}

fn load_store(path: &Path) -> Result<ModelStore> {
    ModelStore::load(path).map_err(|e| input_error(path, e))
}

#[derive(Serialize)]
struct Ranked {
    technique: String,
    predicted_max: f64,
}

#[derive(Serialize)]
struct PredictReport<'a> {
    dataset: &'a str,
    metric: QualityMetric,
    features: FeatureVector,
    ranking: Vec<Ranked>,
}

fn cmd_predict(a: &PredictArgs, g: &GlobalArgs) -> Result<()> {
    let ds = load_input(&a.input, g.seed)?;
    let store = load_store(&a.store)?;
    let features = complexity_features(&ds, &store.manifest.ks)?;
    let predictions = predict_max_accuracy(&store, &features)?;
    let ranking: Vec<Ranked> = rank_techniques(&predictions)
        .into_iter()
        .map(|(technique, predicted_max)| Ranked {
            technique,
            predicted_max,
        })
        .collect();
    if g.csv {
        let rows: Vec<Vec<String>> = ranking
            .iter()
            .enumerate()
            .map(|(i, r)| vec![(i + 1).to_string(), r.technique.clone(), r.predicted_max.to_string()])
            .collect();
        return emit_csv(&["rank", "technique", "predicted_max"], &rows);
    }
    emit_json(
        &PredictReport {
            dataset: ds.name(),
            metric: store.manifest.metric,
            features,
            ranking,
        },
        g,
    )
}

fn workflow_csv(r: &WorkflowResult) -> Result<()> {
    let rows: Vec<Vec<String>> = r
        .runs
        .iter()
        .map(|run| {
            vec![
                r.dataset.clone(),
                r.mode.to_string(),
                run.technique.clone(),
                opt_f64(run.predicted_max),
                opt_f64(run.best_score),
                run.trials.to_string(),
                run.trace.as_ref().map(|t| enum_str(&t.stop_reason)).unwrap_or_default(),
                (run.technique == r.final_technique).to_string(),
            ]
        })
        .collect();
    emit_csv(
        &["dataset", "mode", "technique", "predicted_max", "best_score", "trials", "stop_reason", "selected"],
        &rows,
    )
}

fn cmd_adaptive(a: &AdaptiveArgs, g: &GlobalArgs) -> Result<()> {
    check_budget(&a.search)?;
    let ds = load_input(&a.input, g.seed)?;
    let store = load_store(&a.store)?;
    let reg = registry(a.plugins.as_deref())?;
    let cfg = AdaptiveConfig {
        top_m: a.top_m,
        budget: a.search.budget,
        seed: g.seed,
        threshold_fraction: a.threshold_fraction,
        n_init: a.search.n_init,
    };
    let result = adaptive_optimize(&ds, &store, &reg, &cfg)?;
    write_projection(result.projection.as_ref(), a.output.as_ref())?;
    if g.csv {
        return workflow_csv(&result);
    }
    emit_json(&result, g)
}

fn cmd_conventional(a: &ConventionalArgs, g: &GlobalArgs) -> Result<()> {
    let ds = load_input(&a.input, g.seed)?;
    let reg = a.techniques.registry()?;
    let techniques = a.techniques.selected(&reg)?;
    let cfg = run_config(&a.metric, &a.search, g.seed)?;
    let result = conventional_optimize(&ds, &techniques, &cfg)?;
    write_projection(result.projection.as_ref(), a.output.as_ref())?;
    if g.csv {
        return workflow_csv(&result);
    }
    emit_json(&result, g)
}

fn cmd_benchmark(a: &BenchmarkArgs, g: &GlobalArgs) -> Result<()> {
    let corpus = a.corpus.load()?;
    let reg = a.techniques.registry()?;
    let techniques = a.techniques.selected(&reg)?;
    let cfg = BenchmarkConfig {
        pretrain: PretrainConfig {
            run: run_config(&a.metric, &a.search, g.seed)?,
            ks: a.ks.clone(),
            regressor: a.regressor.parse::<RegressorKind>()?,
            max_points: a.corpus.max_points,
        },
        top_ms: a.top_m.clone(),
        test_fraction: a.test_fraction,
        threshold_fraction: a.threshold_fraction,
    };
    let report = benchmark(&corpus, &reg, &techniques, &cfg)?;
    if g.csv {
        return report.write_csv(std::io::stdout().lock(), g.timings);
    }
    emit_json(&report, g)
}

#[derive(Serialize)]
struct TechniqueInfo {
    id: String,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    command: Option<Vec<String>>,
    space: Option<HyperparamSpace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    space_error: Option<String>,
    defaults: HyperparamAssignment,
}

#[derive(Serialize)]
struct TechniqueList {
    n: usize,
    techniques: Vec<TechniqueInfo>,
}

fn cmd_techniques(a: &TechniquesArgs, g: &GlobalArgs) -> Result<()> {
    let reg = registry(a.plugins.as_deref())?;
    let techniques: Vec<TechniqueInfo> = reg
        .list()
        .iter()
        .map(|t| {
            let space = t.hyperparameter_space(a.n);
            TechniqueInfo {
                id: t.id.clone(),
                kind: if t.is_external() { "external" } else { "builtin" },
                command: match &t.kind {
                    TechniqueKind::External(e) => Some(e.command.clone()),
                    TechniqueKind::Builtin(_) => None,
                },
                space_error: space.as_ref().err().map(ToString::to_string),
                space: space.ok(),
                defaults: t.defaults(),
            }
        })
        .collect();
    if g.csv {
        let rows: Vec<Vec<String>> = techniques
            .iter()
            .flat_map(|t| {
                let dims = t.space.as_ref().map(|s| s.dims().to_vec()).unwrap_or_default();
                if dims.is_empty() {
                    return vec![vec![t.id.clone(), t.kind.into(), String::new(), String::new(), String::new(), String::new()]];
                }
                dims.into_iter()
                    .map(|d| {
                        vec![
                            t.id.clone(),
                            t.kind.into(),
                            d.name.clone(),
                            enum_str(&d.kind),
                            d.lower.to_string(),
                            d.upper.to_string(),
                        ]
                    })
                    .collect()
            })
            .collect();
        return emit_csv(&["technique", "kind", "parameter", "type", "lower", "upper"], &rows);
    }
    emit_json(&TechniqueList { n: a.n, techniques }, g)
}

#[derive(Serialize)]
struct DatasetInfo {
    name: String,
    n: usize,
    d: usize,
    labeled: bool,
    content_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
}

impl DatasetInfo {
    fn new(ds: &Dataset, path: Option<&Path>) -> Self {
        Self {
            name: ds.name().to_string(),
            n: ds.n(),
            d: ds.d(),
            labeled: ds.labels().is_some(),
            content_hash: ds.content_hash(),
            path: path.map(|p| p.display().to_string()),
        }
    }

    fn csv_row(&self) -> Vec<String> {
        vec![
            self.name.clone(),
            self.n.to_string(),
            self.d.to_string(),
            self.labeled.to_string(),
            self.content_hash.clone(),
            self.path.clone().unwrap_or_default(),
        ]
    }
}

const DATASET_HEADER: [&str; 6] = ["name", "n", "d", "labeled", "content_hash", "path"];

fn cmd_generate(a: &GenerateArgs, g: &GlobalArgs) -> Result<()> {
    let kind: SyntheticKind = a.kind.parse()?;
    let mut spec = SyntheticSpec::new(kind, a.n, a.d, g.seed);
    for p in &a.params {
        let (name, value) = p
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("--param expects NAME=VALUE, got '{p}'")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("--param {name}: '{value}' is not a number")))?;
        spec = spec.param(name.trim(), value);
    }
    let ds = generate_synthetic(&spec)?.with_name(format!("{kind}-n{}-d{}-s{}", a.n, a.d, g.seed));
    let Some(out) = &a.output else {
        return dradapt::data::write_dataset_to(&ds, std::io::stdout().lock());
    };
    write_dataset(&ds, out)?;
    let info = DatasetInfo::new(&ds, Some(out));
    if g.csv {
        return emit_csv(&DATASET_HEADER, &[info.csv_row()]);
    }
    emit_json(&info, g)
}

#[derive(Serialize)]
struct CorpusReport {
    manifest: String,
    datasets: Vec<DatasetInfo>,
}

fn cmd_generate_corpus(a: &GenerateCorpusArgs, g: &GlobalArgs) -> Result<()> {
    let corpus = synthetic_corpus(a.count, a.n, g.seed)?;
    std::fs::create_dir_all(&a.dir)?;
    let mut entries = Vec::with_capacity(corpus.len());
    let mut infos = Vec::with_capacity(corpus.len());
    for ds in &corpus {
        let file = format!("{}.csv", ds.name());
        let path = a.dir.join(&file);
        write_dataset(ds, &path)?;
        entries.push(ManifestEntry {
            name: ds.name().to_string(),
            path: PathBuf::from(&file),
            label_column: ds.labels().map(|_| LabelColumn::Last),
        });
        infos.push(DatasetInfo::new(ds, Some(&path)));
    }
    let manifest = a.dir.join("manifest.json");
    let file = std::fs::File::create(&manifest)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &entries)?;
    if g.csv {
        let rows: Vec<Vec<String>> = infos.iter().map(DatasetInfo::csv_row).collect();
        return emit_csv(&DATASET_HEADER, &rows);
    }
    emit_json(
        &CorpusReport {
            manifest: manifest.display().to_string(),
            datasets: infos,
        },
        g,
    )
}
