//! Command-line surface.
//!
//! Subcommands: `synth`, `features`, `train`, `predict`, `evaluate`,
//! `report`, `export-tensor`. A `train` run reads an optional JSON config
//! file (an [`ExperimentConfig`]) and applies flag overrides on top; flags
//! always win. All user paths resolve against `--workdir` when given.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure.

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

use crate::dataio::{generate_synthetic, load_dataset, load_model, save_model, write_dataset, SynthConfig};
use crate::error::{Error, Result};
use crate::fnc::{compute_fnc, write_fnc_cache};
use crate::pipeline::{
    evaluate_scores, predict_with_artifact, run_experiment, DataSource, ExperimentConfig,
    FeatureSet, ModelChoice, Report,
};
use crate::timefreq::{stack_subject_tensor, CwtConfig, StftConfig, TensorKind};

#[derive(Parser)]
#[command(
    name = "icnflow",
    version,
    about = "Band-filtered time courses, time-frequency tensors, connectivity features and classifiers for two-group cohorts"
)]
struct Cli {
    /// Base directory for all relative paths.
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded synthetic cohort on disk.
    Synth(SynthArgs),
    /// Compute per-subject connectivity vectors into a cache CSV.
    Features(FeaturesArgs),
    /// Run one experiment: train, score a holdout, write report and model.
    Train(TrainArgs),
    /// Score a manifest with a saved model.
    Predict(PredictArgs),
    /// AUC of one or two score files against labeled sets.
    Evaluate(EvaluateArgs),
    /// Merge experiment report CSVs into one.
    Report(ReportArgs),
    /// Write one slice of a subject's spectrogram/scalogram tensor as CSV.
    ExportTensor(ExportTensorArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory (manifest.csv + icn/ go here).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 234)]
    length: usize,
    #[arg(long, default_value_t = 2.0)]
    fs: f64,
    #[arg(long, default_value_t = 0.5)]
    class_balance: f64,
    #[arg(long, default_value_t = 6.0)]
    snr_db: f64,
    #[arg(long, default_value_t = 0.5)]
    sz_tone: f64,
    #[arg(long, default_value_t = 0.15)]
    bp_tone: f64,
    /// Comma-separated channel indices carrying the SZ structure.
    #[arg(long)]
    sz_channels: Option<String>,
    /// Comma-separated channel indices carrying the BP structure.
    #[arg(long)]
    bp_channels: Option<String>,
    /// Leave the manifest label column empty; true labels go to labels.csv.
    #[arg(long, default_value_t = false)]
    unlabeled: bool,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    fs: f64,
    /// Output CSV: one row per subject, id plus 5460 correlations.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    feature_set: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Train from a manifest instead of synthetic data.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Synthetic cohort size (used when no manifest is given).
    #[arg(long)]
    synth_n: Option<usize>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    holdout: Option<f64>,
    #[arg(long)]
    fs: Option<f64>,
    /// Output directory for report, model, config snapshot and score files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    fs: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Score CSV from `predict`.
    #[arg(long)]
    scores: PathBuf,
    /// Labels: a manifest or a `subject_id,label` CSV.
    #[arg(long)]
    labels: PathBuf,
    /// Optional second evaluation set.
    #[arg(long)]
    scores2: Option<PathBuf>,
    #[arg(long)]
    labels2: Option<PathBuf>,
    /// Optional JSON output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Report CSVs to merge.
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportTensorArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    subject: String,
    /// spectrogram or scalogram.
    #[arg(long)]
    kind: String,
    /// Axis to slice: 0 = frequency/scale, 1 = time, 2 = channel.
    #[arg(long)]
    axis: usize,
    /// Index along the sliced axis.
    #[arg(long)]
    index: usize,
    #[arg(long, default_value_t = 2.0)]
    fs: f64,
    #[arg(long)]
    out: PathBuf,
}

/// Parses arguments from the process environment and runs; returns the exit
/// code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn resolve(workdir: &Option<PathBuf>, path: &Path) -> PathBuf {
    match workdir {
        Some(base) if path.is_relative() => base.join(path),
        _ => path.to_path_buf(),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let wd = cli.workdir.clone();
    match cli.cmd {
        Cmd::Synth(args) => cmd_synth(&wd, args),
        Cmd::Features(args) => cmd_features(&wd, args),
        Cmd::Train(args) => cmd_train(&wd, args),
        Cmd::Predict(args) => cmd_predict(&wd, args),
        Cmd::Evaluate(args) => cmd_evaluate(&wd, args),
        Cmd::Report(args) => cmd_report(&wd, args),
        Cmd::ExportTensor(args) => cmd_export_tensor(&wd, args),
    }
}

fn parse_channel_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|c| {
            c.trim()
                .parse::<usize>()
                .map_err(|_| Error::config(format!("bad channel index {:?}", c.trim())))
        })
        .collect()
}

fn cmd_synth(wd: &Option<PathBuf>, args: SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig {
        n_subjects: args.n,
        length: args.length,
        fs: args.fs,
        class_balance: args.class_balance,
        snr_db: args.snr_db,
        seed: args.seed,
        sz_tone_hz: args.sz_tone,
        bp_tone_hz: args.bp_tone,
        ..SynthConfig::default()
    };
    if let Some(s) = &args.sz_channels {
        cfg.sz_coupled_channels = parse_channel_list(s)?;
    }
    if let Some(s) = &args.bp_channels {
        cfg.bp_coupled_channels = parse_channel_list(s)?;
    }
    let ds = generate_synthetic(&cfg)?;
    let out = resolve(wd, &args.out);
    let manifest = write_dataset(&ds, &out, !args.unlabeled)?;
    println!("wrote {} subjects to {}", ds.len(), manifest.display());
    Ok(())
}

fn cmd_features(wd: &Option<PathBuf>, args: FeaturesArgs) -> Result<()> {
    let manifest = resolve(wd, &args.manifest);
    let ds = load_dataset(&manifest, args.fs)?;
    let mut rows = Vec::with_capacity(ds.len());
    for s in ds.subjects() {
        rows.push((s.subject_id.clone(), compute_fnc(&s.icn)?));
    }
    let out = resolve(wd, &args.out);
    write_fnc_cache(&out, &rows)?;
    println!("wrote {} connectivity rows to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_train(wd: &Option<PathBuf>, args: TrainArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => {
            let path = resolve(wd, path);
            let text =
                std::fs::read_to_string(&path).map_err(|e| Error::io(path.clone(), e))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| Error::config(format!("bad config {}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };

    // flags win over the config file
    if let Some(fs) = &args.feature_set {
        cfg.feature_set = FeatureSet::parse(fs)?;
    }
    if let Some(m) = &args.model {
        cfg.model = ModelChoice::parse(m)?;
    }
    if let Some(m) = &args.manifest {
        cfg.data = DataSource::Manifest {
            path: resolve(wd, m),
        };
    }
    if let Some(fs) = args.fs {
        cfg.fs = fs;
    }
    if let Some(n) = args.synth_n {
        match &mut cfg.data {
            DataSource::Synthetic(s) => s.n_subjects = n,
            DataSource::Manifest { .. } => {
                return Err(Error::config(
                    "--synth-n conflicts with a manifest data source",
                ))
            }
        }
    }
    if let Some(snr) = args.snr_db {
        if let DataSource::Synthetic(s) = &mut cfg.data {
            s.snr_db = snr;
        }
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        if let DataSource::Synthetic(s) = &mut cfg.data {
            s.seed = seed;
        }
    }
    if let Some(e) = args.epochs {
        cfg.train.epochs = e;
        cfg.train.patience = cfg.train.patience.min(e);
    }
    if let Some(f) = args.folds {
        cfg.folds = f;
    }
    if let Some(k) = args.top_k {
        cfg.top_k = k;
    }
    if let Some(h) = args.holdout {
        cfg.holdout_fraction = h;
    }

    let outdir = resolve(wd, &args.out);
    std::fs::create_dir_all(&outdir).map_err(|e| Error::io(outdir.clone(), e))?;

    let outcome = run_experiment(&cfg)?;

    let write = |name: &str, text: String| -> Result<()> {
        let p = outdir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(p, e))
    };
    write("report.csv", outcome.report.to_csv_string())?;
    write(
        "report.json",
        serde_json::to_string_pretty(&outcome.report)
            .map_err(|e| Error::data(format!("report serialization failed: {e}")))?,
    )?;
    write(
        "config.json",
        serde_json::to_string_pretty(&cfg)
            .map_err(|e| Error::data(format!("config serialization failed: {e}")))?,
    )?;
    save_model(&outcome.artifact, &outdir.join("model.json"))?;
    if let Some(h) = &outcome.history {
        write("history.csv", h.to_csv_string())?;
    }
    if let Some(rows) = &outcome.grid_rows {
        let mut text = String::from("grid_point,fold,auc\n");
        for r in rows {
            text.push_str(&format!("{},{},{}\n", r.spec.describe(), r.fold, r.auc));
        }
        write("grid_cv.csv", text)?;
    }
    let mut scores = String::from("subject_id,score\n");
    for (id, s) in &outcome.holdout_scores {
        scores.push_str(&format!("{id},{s}\n"));
    }
    write("holdout_scores.csv", scores)?;

    for row in &outcome.report.rows {
        println!(
            "{} + {} [{}]: AUC {} (n = {})",
            row.feature_set, row.model, row.split, row.auc, row.n
        );
    }
    println!("artifacts in {}", outdir.display());
    Ok(())
}

fn read_scores_csv(path: &Path) -> Result<Vec<(String, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.to_path_buf(), e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 && line.trim_end() == "subject_id,score" {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (id, score) = line.split_once(',').ok_or_else(|| {
            Error::data_at("expected subject_id,score", path, Some(idx + 1))
        })?;
        let score: f64 = score.trim().parse().map_err(|_| {
            Error::data_at(format!("bad score {:?}", score.trim()), path, Some(idx + 1))
        })?;
        out.push((id.trim().to_string(), score));
    }
    if out.is_empty() {
        return Err(Error::data_at("no scores found", path, None));
    }
    Ok(out)
}

/// Reads labels from either a manifest or a two-column `subject_id,label`
/// CSV. Unlabeled rows are skipped.
fn read_labels_file(path: &Path) -> Result<Vec<(String, bool)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.to_path_buf(), e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0
            && (line.trim_end() == "subject_id,label,icn_path"
                || line.trim_end() == "subject_id,label")
        {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(Error::data_at(
                "expected at least subject_id,label",
                path,
                Some(idx + 1),
            ));
        }
        match fields[1].trim() {
            "SZ" => out.push((fields[0].trim().to_string(), true)),
            "BP" => out.push((fields[0].trim().to_string(), false)),
            "" => {}
            other => {
                return Err(Error::data_at(
                    format!("unknown label {other:?}"),
                    path,
                    Some(idx + 1),
                ))
            }
        }
    }
    if out.is_empty() {
        return Err(Error::data_at("no labeled subjects found", path, None));
    }
    Ok(out)
}

fn cmd_predict(wd: &Option<PathBuf>, args: PredictArgs) -> Result<()> {
    let artifact = load_model(&resolve(wd, &args.model))?;
    let ds = load_dataset(&resolve(wd, &args.manifest), args.fs)?;
    let scored = predict_with_artifact(&artifact, &ds)?;
    let mut text = String::from("subject_id,score\n");
    for (id, s) in &scored {
        text.push_str(&format!("{id},{s}\n"));
    }
    let out = resolve(wd, &args.out);
    std::fs::write(&out, text).map_err(|e| Error::io(out.clone(), e))?;
    println!("wrote {} scores to {}", scored.len(), out.display());
    Ok(())
}

fn cmd_evaluate(wd: &Option<PathBuf>, args: EvaluateArgs) -> Result<()> {
    if args.scores2.is_some() != args.labels2.is_some() {
        return Err(Error::config(
            "--scores2 and --labels2 must be given together",
        ));
    }
    let mut sets = vec![(resolve(wd, &args.scores), resolve(wd, &args.labels))];
    if let (Some(s2), Some(l2)) = (&args.scores2, &args.labels2) {
        sets.push((resolve(wd, s2), resolve(wd, l2)));
    }
    let mut aucs = Vec::new();
    for (scores_path, labels_path) in &sets {
        let scores = read_scores_csv(scores_path)?;
        let labels = read_labels_file(labels_path)?;
        aucs.push(evaluate_scores(&scores, &labels)?);
    }
    let result = if aucs.len() == 2 {
        serde_json::json!({
            "auc": aucs,
            "mean_auc": 0.5 * (aucs[0] + aucs[1]),
        })
    } else {
        serde_json::json!({ "auc": aucs[0] })
    };
    let text = serde_json::to_string_pretty(&result)
        .map_err(|e| Error::data(format!("result serialization failed: {e}")))?;
    println!("{text}");
    if let Some(out) = &args.out {
        let out = resolve(wd, out);
        std::fs::write(&out, text).map_err(|e| Error::io(out, e))?;
    }
    Ok(())
}

fn cmd_report(wd: &Option<PathBuf>, args: ReportArgs) -> Result<()> {
    if args.inputs.is_empty() {
        return Err(Error::config("report needs at least one input CSV"));
    }
    let mut merged = Report::default();
    for input in &args.inputs {
        let path = resolve(wd, input);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(path.clone(), e))?;
        let part = Report::from_csv_str(&text, &path.display().to_string())?;
        merged.rows.extend(part.rows);
    }
    let out = resolve(wd, &args.out);
    std::fs::write(&out, merged.to_csv_string()).map_err(|e| Error::io(out.clone(), e))?;
    let json_out = out.with_extension("json");
    std::fs::write(
        &json_out,
        serde_json::to_string_pretty(&merged)
            .map_err(|e| Error::data(format!("report serialization failed: {e}")))?,
    )
    .map_err(|e| Error::io(json_out.clone(), e))?;
    println!(
        "merged {} rows into {} and {}",
        merged.rows.len(),
        out.display(),
        json_out.display()
    );
    Ok(())
}

fn cmd_export_tensor(wd: &Option<PathBuf>, args: ExportTensorArgs) -> Result<()> {
    let kind = match args.kind.as_str() {
        "spectrogram" => TensorKind::Spectrogram,
        "scalogram" => TensorKind::Scalogram,
        other => {
            return Err(Error::config(format!(
                "unknown tensor kind {other:?} (expected spectrogram or scalogram)"
            )))
        }
    };
    if args.axis > 2 {
        return Err(Error::config("axis must be 0, 1 or 2"));
    }
    let ds = load_dataset(&resolve(wd, &args.manifest), args.fs)?;
    let subject = ds
        .subjects()
        .iter()
        .find(|s| s.subject_id == args.subject)
        .ok_or_else(|| Error::data(format!("subject {:?} not in manifest", args.subject)))?;
    let tensor = stack_subject_tensor(
        &subject.icn,
        kind,
        &StftConfig::default(),
        &CwtConfig::default(),
    )?;
    let (d0, d1, d2) = tensor.data.shape();
    let limit = [d0, d1, d2][args.axis];
    if args.index >= limit {
        return Err(Error::config(format!(
            "index {} out of range for axis {} of extent {limit}",
            args.index, args.axis
        )));
    }
    let slice = tensor.data.slice(args.axis, args.index);
    let mut text = String::new();
    for r in 0..slice.rows() {
        let row: Vec<String> = slice.row(r).iter().map(|v| format!("{v}")).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let out = resolve(wd, &args.out);
    std::fs::write(&out, text).map_err(|e| Error::io(out.clone(), e))?;
    println!(
        "wrote {}x{} slice (axis {}, index {}) to {}",
        slice.rows(),
        slice.cols(),
        args.axis,
        args.index,
        out.display()
    );
    Ok(())
}
