use std::sync::OnceLock;

use dradapt::complexity::complexity_features;
use dradapt::data::{generate_synthetic, synthetic_corpus, SyntheticKind, SyntheticSpec};
use dradapt::drtech::{Builtin, TechniqueDescriptor, TechniqueRegistry};
use dradapt::quality::{evaluate_projection, QualityMetric, SpaceSummary};
use dradapt::workflow::{
    adaptive_optimize, compare, conventional_optimize, predict_max_accuracy, pretrain, AdaptiveConfig, ModelStore,
    PretrainConfig, RunConfig,
};

fn builtins() -> Vec<TechniqueDescriptor> {
    Builtin::ALL.into_iter().map(TechniqueDescriptor::builtin).collect()
}

fn config() -> PretrainConfig {
    PretrainConfig {
        run: RunConfig {
            budget: 6,
            n_init: 3,
            seed: 17,
            ..RunConfig::default()
        },
        ..PretrainConfig::default()
    }
}

fn store() -> &'static ModelStore {
    static STORE: OnceLock<ModelStore> = OnceLock::new();
    STORE.get_or_init(|| pretrain(&synthetic_corpus(20, 100, 17).unwrap(), &builtins(), &config()).unwrap())
}

fn adaptive(top_m: usize) -> AdaptiveConfig {
    AdaptiveConfig {
        top_m,
        budget: 6,
        n_init: 3,
        seed: 2,
        ..AdaptiveConfig::default()
    }
}

#[test]
fn store_has_one_model_per_technique() {
    let store = store();
    assert_eq!(store.techniques().len(), 5);
    assert_eq!(store.manifest.feature_arity, 4);
    for per_metric in store.models.values() {
        let record = &per_metric["tnc"];
        assert_eq!(record.model.feature_arity, 4);
        assert_eq!(record.training.len(), 20);
    }
}

#[test]
fn store_survives_a_json_round_trip_and_retraining() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("store.json");
    store().save(&path).unwrap();
    assert_eq!(&ModelStore::load(&path).unwrap(), store());

    let again = pretrain(&synthetic_corpus(20, 100, 17).unwrap(), &builtins(), &config()).unwrap();
    assert_eq!(serde_json::to_string(&again).unwrap(), serde_json::to_string(store()).unwrap());
}

#[test]
fn training_predictions_stay_inside_the_residual_envelope() {
    let store = store();
    let corpus = synthetic_corpus(20, 100, 17).unwrap();
    for ds in corpus.iter().take(5) {
        let preds = predict_max_accuracy(store, &complexity_features(ds, &store.manifest.ks).unwrap()).unwrap();
        assert_eq!(preds.len(), 5);
        for (t, p) in &preds {
            assert!((0.0..=1.0).contains(p));
            let record = &store.models[t]["tnc"];
            let point = record.training.iter().find(|tp| tp.dataset == ds.name()).unwrap();
            assert!((p - point.target).abs() <= record.max_abs_residual + 1e-12, "{t}");
        }
    }
}

#[test]
fn wider_adaptive_runs_do_more_work_than_narrow_ones() {
    let ds = generate_synthetic(&SyntheticSpec::new(SyntheticKind::GaussianMixture, 100, 12, 40)).unwrap();
    let reg = TechniqueRegistry::new();
    let one = adaptive_optimize(&ds, store(), &reg, &adaptive(1)).unwrap();
    let three = adaptive_optimize(&ds, store(), &reg, &adaptive(3)).unwrap();
    assert_eq!(one.chosen.len(), 1);
    assert_eq!(three.chosen[0], one.chosen[0]);
    assert!(three.total_trials >= one.total_trials);
    assert_eq!(three.final_score, three.recomputed_score());

    let cfg = RunConfig {
        budget: 6,
        n_init: 3,
        seed: 2,
        ..RunConfig::default()
    };
    let conventional = conventional_optimize(&ds, &builtins(), &cfg).unwrap();
    assert_eq!(conventional.total_trials, 4 * 6 + 1);
    let report = compare(&three, &conventional).unwrap();
    assert!(report.trial_count_ratio <= 1.0);
}

#[test]
fn linear_data_is_projected_almost_perfectly() {
    let ds = generate_synthetic(
        &SyntheticSpec::new(SyntheticKind::HyperplaneEmbedded, 100, 12, 5).param("intrinsic", 2.0),
    )
    .unwrap();
    let result = adaptive_optimize(&ds, store(), &TechniqueRegistry::new(), &adaptive(3)).unwrap();
    assert!(result.chosen.iter().any(|t| t == "pca"), "chosen {:?}", result.chosen);
    let proj = result.projection.as_ref().unwrap();
    let tnc = evaluate_projection(QualityMetric::TncF1, &SpaceSummary::new(&ds), proj, 10).unwrap().value;
    assert!(tnc >= 0.99, "{tnc}");
}
