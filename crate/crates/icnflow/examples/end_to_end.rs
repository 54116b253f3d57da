//! One full experiment through the pipeline, plus a model round trip.
//!
//! ```bash
//! cargo run --release --example end_to_end
//! ```

use icnflow::classical::{Algorithm, ClassifierSpec};
use icnflow::dataio::{load_model, save_model, SynthConfig};
use icnflow::pipeline::{
    load_source, predict_with_artifact, run_experiment, DataSource, ExperimentConfig, FeatureSet,
    ModelChoice,
};

fn main() {
    let cfg = ExperimentConfig {
        data: DataSource::Synthetic(SynthConfig {
            n_subjects: 60,
            snr_db: 6.0,
            seed: 31,
            ..SynthConfig::default()
        }),
        feature_set: FeatureSet::FncTop20,
        model: ModelChoice::Classical(Algorithm::Lda),
        grid: Some(vec![
            ClassifierSpec::Lda { ridge: 1e-3 },
            ClassifierSpec::Lda { ridge: 1e-1 },
        ]),
        seed: 31,
        ..ExperimentConfig::default()
    };
    println!("config fingerprint: {}", cfg.fingerprint());

    let outcome = run_experiment(&cfg).unwrap();
    for row in &outcome.report.rows {
        println!(
            "{} + {} [{}]: AUC {:.4} over {} subjects",
            row.feature_set, row.model, row.split, row.auc, row.n
        );
    }

    // persist the model and rescore the cohort through the artifact
    let path = std::env::temp_dir().join("icnflow-example-model.json");
    save_model(&outcome.artifact, &path).unwrap();
    let artifact = load_model(&path).unwrap();
    let ds = load_source(&cfg).unwrap();
    let rescored = predict_with_artifact(&artifact, &ds).unwrap();
    let identical = outcome.holdout_scores.iter().all(|(id, s)| {
        rescored
            .iter()
            .find(|(rid, _)| rid == id)
            .is_some_and(|(_, rs)| rs == s)
    });
    println!("round-tripped model reproduces holdout scores bit-exactly: {identical}");
    let _ = std::fs::remove_file(&path);
}
