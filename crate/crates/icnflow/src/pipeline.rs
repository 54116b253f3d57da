//! End-to-end experiments: data -> features -> model -> scored report.
//!
//! An [`ExperimentConfig`] pairs a feature set with a compatible model and
//! carries every module setting plus one seed, so a config file pins a run
//! bit-for-bit. Band-limited and raw channel matrices feed the 1D network,
//! stacked spectrogram/scalogram tensors feed the 3D network, and
//! connectivity vectors (all 5460, or the chi-square top k) feed the
//! classical models through grid-searched cross-validation.
//!
//! Trained models persist as [`ModelArtifact`]s whose feature descriptor
//! records everything needed to rebuild the exact feature space for unseen
//! manifests: the band, transform configs, normalization bounds and selected
//! feature indices.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::time::Instant;

use crate::array::{Mat, Tensor3};
use crate::classical::{
    default_grid, from_param_arrays, grid_search_cv, predict_scores, to_param_arrays, Algorithm,
    ClassifierSpec, GridCvRow,
};
use crate::dataio::{
    fnv1a64, generate_synthetic, load_dataset, pad_icn, Dataset, ModelArtifact, SynthConfig,
};
use crate::dsp::{filter_bank, BandSpec};
use crate::error::{Error, Result};
use crate::eval::{auc_of, stratified_split};
use crate::fnc::{
    chi2_scores, compute_fnc, minmax_apply, minmax_fit, select_top_k, FeatureTable, MinmaxBounds,
};
use crate::neural::{
    predict_batch, train as train_net, Net1dConfig, Net3dConfig, Network1d, Network3d,
    TrainConfig, TrainHistory,
};
use crate::rng::derive_seed;
use crate::timefreq::{stack_subject_tensor, CwtConfig, StftConfig, TensorKind};

/// The eight feature sets of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    RawIcn,
    IcnLow,
    IcnMid,
    IcnHigh,
    Spectrogram,
    Scalogram,
    FncAll,
    FncTop20,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 8] = [
        FeatureSet::RawIcn,
        FeatureSet::IcnLow,
        FeatureSet::IcnMid,
        FeatureSet::IcnHigh,
        FeatureSet::Spectrogram,
        FeatureSet::Scalogram,
        FeatureSet::FncAll,
        FeatureSet::FncTop20,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::RawIcn => "raw_icn",
            FeatureSet::IcnLow => "icn_low",
            FeatureSet::IcnMid => "icn_mid",
            FeatureSet::IcnHigh => "icn_high",
            FeatureSet::Spectrogram => "spectrogram",
            FeatureSet::Scalogram => "scalogram",
            FeatureSet::FncAll => "fnc_all",
            FeatureSet::FncTop20 => "fnc_top20",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        FeatureSet::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config(format!("unknown feature set {s:?}")))
    }

    fn band_index(self) -> Option<usize> {
        match self {
            FeatureSet::IcnLow => Some(0),
            FeatureSet::IcnMid => Some(1),
            FeatureSet::IcnHigh => Some(2),
            _ => None,
        }
    }

    fn tensor_kind(self) -> Option<TensorKind> {
        match self {
            FeatureSet::Spectrogram => Some(TensorKind::Spectrogram),
            FeatureSet::Scalogram => Some(TensorKind::Scalogram),
            _ => None,
        }
    }

    pub fn is_fnc(self) -> bool {
        matches!(self, FeatureSet::FncAll | FeatureSet::FncTop20)
    }
}

impl std::fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The model side of a pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Cnn1d,
    Cnn3d,
    Classical(Algorithm),
}

impl ModelChoice {
    pub fn name(self) -> String {
        match self {
            ModelChoice::Cnn1d => "cnn1d".into(),
            ModelChoice::Cnn3d => "cnn3d".into(),
            ModelChoice::Classical(a) => a.name().into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cnn1d" => Ok(ModelChoice::Cnn1d),
            "cnn3d" => Ok(ModelChoice::Cnn3d),
            other => Algorithm::parse(other).map(ModelChoice::Classical),
        }
    }
}

/// Where the cohort comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Manifest { path: PathBuf },
    Synthetic(SynthConfig),
}

/// Full experiment description; serializable as the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub feature_set: FeatureSet,
    pub model: ModelChoice,
    /// Sampling rate used when loading a manifest.
    pub fs: f64,
    /// Low, mid and high band edges for the band-limited feature sets.
    pub bands: Vec<BandSpec>,
    pub stft: StftConfig,
    pub cwt: CwtConfig,
    /// Halve the time axis of scalogram tensors before the 3D network.
    pub downsample_time: bool,
    pub train: TrainConfig,
    pub net1d: Net1dConfig,
    pub net3d: Net3dConfig,
    /// Classical hyperparameter grid; `None` selects the documented default
    /// grid for the chosen algorithm.
    pub grid: Option<Vec<ClassifierSpec>>,
    pub folds: usize,
    pub top_k: usize,
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataSource::Synthetic(SynthConfig::default()),
            feature_set: FeatureSet::RawIcn,
            model: ModelChoice::Cnn1d,
            fs: 2.0,
            bands: crate::dsp::default_bands().to_vec(),
            stft: StftConfig::default(),
            cwt: CwtConfig::default(),
            downsample_time: false,
            train: TrainConfig::default(),
            net1d: Net1dConfig::default(),
            net3d: Net3dConfig::default(),
            grid: None,
            folds: 5,
            top_k: 20,
            holdout_fraction: 0.2,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// Hash over the canonical serialized config; any change to any module
    /// setting changes the fingerprint.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a64(canonical.as_bytes()))
    }

    pub fn validate_pairing(&self) -> Result<()> {
        let ok = match self.feature_set {
            FeatureSet::RawIcn | FeatureSet::IcnLow | FeatureSet::IcnMid | FeatureSet::IcnHigh => {
                self.model == ModelChoice::Cnn1d
            }
            FeatureSet::Spectrogram | FeatureSet::Scalogram => self.model == ModelChoice::Cnn3d,
            FeatureSet::FncAll | FeatureSet::FncTop20 => {
                matches!(self.model, ModelChoice::Classical(_))
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "feature set {} is incompatible with model {}: band/raw channel sets require cnn1d, \
                 tensor sets require cnn3d, connectivity sets require a classical algorithm",
                self.feature_set.name(),
                self.model.name()
            )))
        }
    }

    fn band_for(&self, set: FeatureSet) -> Result<BandSpec> {
        let idx = set
            .band_index()
            .ok_or_else(|| Error::config(format!("{} is not a band-limited set", set.name())))?;
        self.bands.get(idx).copied().ok_or_else(|| {
            Error::config(format!(
                "config lists {} bands, need at least {}",
                self.bands.len(),
                idx + 1
            ))
        })
    }
}

/// Everything the model needs to rebuild its feature space on unseen data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub feature_set: FeatureSet,
    pub fs: f64,
    pub channels: usize,
    /// Expected padded length for the sequence/tensor paths.
    pub input_length: Option<usize>,
    pub band: Option<BandSpec>,
    pub stft: Option<StftConfig>,
    pub cwt: Option<CwtConfig>,
    pub downsample_time: Option<bool>,
    pub normalization: Option<MinmaxBounds>,
    pub selected: Option<Vec<usize>>,
}

/// One scored evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub feature_set: String,
    pub model: String,
    pub split: String,
    pub auc: f64,
    pub n: usize,
    pub runtime_s: f64,
    pub fingerprint: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub const CSV_HEADER: &'static str = "feature_set,model,split,auc,n,runtime_s,fingerprint";

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.feature_set, r.model, r.split, r.auc, r.n, r.runtime_s, r.fingerprint
            ));
        }
        out
    }

    pub fn from_csv_str(text: &str, origin: &str) -> Result<Report> {
        let mut rows = Vec::new();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == Self::CSV_HEADER => {}
            _ => {
                return Err(Error::data(format!(
                    "{origin}: not a report CSV (expected header {:?})",
                    Self::CSV_HEADER
                )))
            }
        }
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::data(format!(
                    "{origin}:{}: expected 7 fields, found {}",
                    idx + 1,
                    f.len()
                )));
            }
            rows.push(ReportRow {
                feature_set: f[0].to_string(),
                model: f[1].to_string(),
                split: f[2].to_string(),
                auc: f[3]
                    .parse()
                    .map_err(|_| Error::data(format!("{origin}:{}: bad auc {:?}", idx + 1, f[3])))?,
                n: f[4]
                    .parse()
                    .map_err(|_| Error::data(format!("{origin}:{}: bad n {:?}", idx + 1, f[4])))?,
                runtime_s: f[5].parse().map_err(|_| {
                    Error::data(format!("{origin}:{}: bad runtime {:?}", idx + 1, f[5]))
                })?,
                fingerprint: f[6].to_string(),
            });
        }
        Ok(Report { rows })
    }
}

/// Result bundle of one experiment.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub report: Report,
    pub artifact: ModelArtifact,
    pub history: Option<TrainHistory>,
    pub grid_rows: Option<Vec<GridCvRow>>,
    pub holdout_scores: Vec<(String, f64)>,
    pub holdout_auc: f64,
}

/// Materializes the configured data source.
pub fn load_source(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.data {
        DataSource::Manifest { path } => load_dataset(path, cfg.fs),
        DataSource::Synthetic(synth) => generate_synthetic(synth),
    }
}

/// Average-pools the time axis (axis 1) by two, flooring the length.
pub fn downsample_time_axis(t: &Tensor3) -> Tensor3 {
    let (d0, d1, d2) = t.shape();
    let half = d1 / 2;
    let mut out = Tensor3::zeros(d0, half, d2);
    for i in 0..d0 {
        for j in 0..half {
            for k in 0..d2 {
                out.set(i, j, k, 0.5 * (t.get(i, 2 * j, k) + t.get(i, 2 * j + 1, k)));
            }
        }
    }
    out
}

fn sequence_features(ds: &Dataset, set: FeatureSet, band: Option<BandSpec>) -> Result<Vec<Mat>> {
    match set {
        FeatureSet::RawIcn => Ok(ds
            .subjects()
            .iter()
            .map(|s| s.icn.data().clone())
            .collect()),
        FeatureSet::IcnLow | FeatureSet::IcnMid | FeatureSet::IcnHigh => {
            let band = band.ok_or_else(|| Error::config("band-limited set without a band"))?;
            let mut out = Vec::with_capacity(ds.len());
            for s in ds.subjects() {
                let mut banded = filter_bank(&s.icn, &[band])?;
                out.push(banded.remove(0).data().clone());
            }
            Ok(out)
        }
        other => Err(Error::config(format!(
            "{} is not a sequence feature set",
            other.name()
        ))),
    }
}

fn tensor_features(
    ds: &Dataset,
    kind: TensorKind,
    stft: &StftConfig,
    cwt: &CwtConfig,
    downsample: bool,
) -> Result<Vec<Tensor3>> {
    let mut out = Vec::with_capacity(ds.len());
    for s in ds.subjects() {
        let tensor = stack_subject_tensor(&s.icn, kind, stft, cwt)?;
        let data = if downsample && kind == TensorKind::Scalogram {
            downsample_time_axis(&tensor.data)
        } else {
            tensor.data
        };
        out.push(data);
    }
    Ok(out)
}

fn fnc_matrix(ds: &Dataset) -> Result<Mat> {
    let mut m = Mat::zeros(ds.len(), crate::FNC_LEN);
    for (i, s) in ds.subjects().iter().enumerate() {
        let v = match &s.fnc {
            Some(v) => v.clone(),
            None => compute_fnc(&s.icn)?,
        };
        m.row_mut(i).copy_from_slice(v.values());
    }
    Ok(m)
}

fn dataset_labels(ds: &Dataset) -> Result<Vec<bool>> {
    ds.labels().ok_or_else(|| {
        Error::data("training requires labels for every subject; manifest has unlabeled rows")
    })
}

/// Runs one experiment: ingest, feature construction, training with
/// cross-validation or early stopping, holdout scoring and AUC.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate_pairing()?;
    let started = Instant::now();
    let fingerprint = cfg.fingerprint();
    let ds = load_source(cfg)?;
    let labels = dataset_labels(&ds)?;
    let (train_idx, hold_idx) =
        stratified_split(&labels, cfg.holdout_fraction, derive_seed(cfg.seed, 10))?;
    let hold_labels: Vec<bool> = hold_idx.iter().map(|&i| labels[i]).collect();
    let hold_ids: Vec<String> = hold_idx
        .iter()
        .map(|&i| ds.subjects()[i].subject_id.clone())
        .collect();

    let mut descriptor = FeatureDescriptor {
        feature_set: cfg.feature_set,
        fs: ds.fs(),
        channels: crate::CHANNELS,
        input_length: None,
        band: None,
        stft: None,
        cwt: None,
        downsample_time: None,
        normalization: None,
        selected: None,
    };

    let train_cfg = TrainConfig {
        seed: derive_seed(cfg.seed, 3),
        ..cfg.train.clone()
    };

    let mut history = None;
    let mut grid_rows = None;
    let algorithm_tag: String;
    let hyper: serde_json::Value;
    let params: Vec<crate::dataio::ParamArray>;
    let hold_scores: Vec<f64>;
    let val_row: Option<(f64, usize)>;

    match cfg.model {
        ModelChoice::Cnn1d => {
            let band = cfg
                .feature_set
                .band_index()
                .map(|_| cfg.band_for(cfg.feature_set))
                .transpose()?;
            descriptor.band = band;
            descriptor.input_length = Some(ds.max_length());
            let inputs = sequence_features(&ds, cfg.feature_set, band)?;
            let train_in: Vec<Mat> = train_idx.iter().map(|&i| inputs[i].clone()).collect();
            let train_y: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();
            let net = Network1d::new(cfg.net1d.clone(), derive_seed(cfg.seed, 2))?;
            let (trained, h) = train_net(net, &train_in, &train_y, &train_cfg)?;
            let hold_in: Vec<Mat> = hold_idx.iter().map(|&i| inputs[i].clone()).collect();
            hold_scores = predict_batch(&trained, &hold_in)?;
            let best = h.epochs[h.best_epoch];
            let n_val = train_idx.len()
                - stratified_split(&train_y, train_cfg.val_fraction, train_cfg.seed)?
                    .0
                    .len();
            val_row = Some((best.val_auc, n_val));
            params = trained.to_param_arrays();
            hyper = serde_json::json!({ "net1d": cfg.net1d, "train": train_cfg });
            algorithm_tag = "cnn1d".into();
            history = Some(h);
        }
        ModelChoice::Cnn3d => {
            let kind = cfg
                .feature_set
                .tensor_kind()
                .ok_or_else(|| Error::config("3D network requires a tensor feature set"))?;
            descriptor.stft = matches!(kind, TensorKind::Spectrogram).then(|| cfg.stft.clone());
            descriptor.cwt = matches!(kind, TensorKind::Scalogram).then(|| cfg.cwt.clone());
            descriptor.downsample_time = Some(cfg.downsample_time);
            descriptor.input_length = Some(ds.max_length());
            let inputs = tensor_features(&ds, kind, &cfg.stft, &cfg.cwt, cfg.downsample_time)?;
            let train_in: Vec<Tensor3> = train_idx.iter().map(|&i| inputs[i].clone()).collect();
            let train_y: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();
            let net = Network3d::new(cfg.net3d.clone(), derive_seed(cfg.seed, 2))?;
            let (trained, h) = train_net(net, &train_in, &train_y, &train_cfg)?;
            let hold_in: Vec<Tensor3> = hold_idx.iter().map(|&i| inputs[i].clone()).collect();
            hold_scores = predict_batch(&trained, &hold_in)?;
            let best = h.epochs[h.best_epoch];
            let n_val = train_idx.len()
                - stratified_split(&train_y, train_cfg.val_fraction, train_cfg.seed)?
                    .0
                    .len();
            val_row = Some((best.val_auc, n_val));
            params = trained.to_param_arrays();
            hyper = serde_json::json!({ "net3d": cfg.net3d, "train": train_cfg });
            algorithm_tag = "cnn3d".into();
            history = Some(h);
        }
        ModelChoice::Classical(algorithm) => {
            let x_all = fnc_matrix(&ds)?;
            let train_y: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();

            // normalization bounds and any selection are fitted on training
            // rows only, then applied to the full table
            let train_table = FeatureTable::new(x_all.select_rows(&train_idx));
            let bounds = minmax_fit(&train_table);
            let normalized_all = minmax_apply(&bounds, &FeatureTable::new(x_all))?;
            descriptor.normalization = Some(bounds.clone());

            let x_model = if cfg.feature_set == FeatureSet::FncTop20 {
                let train_norm = FeatureTable::new(normalized_all.x.select_rows(&train_idx));
                let scores = chi2_scores(&train_norm, &train_y)?;
                let selection = select_top_k(&scores, cfg.top_k)?;
                descriptor.selected = Some(selection.selected.clone());
                normalized_all.x.select_cols(&selection.selected)
            } else {
                normalized_all.x
            };

            let grid = cfg.grid.clone().unwrap_or_else(|| default_grid(algorithm));
            if let Some(bad) = grid.iter().find(|s| s.algorithm() != algorithm) {
                return Err(Error::config(format!(
                    "grid entry {} does not match the experiment algorithm {}",
                    bad.describe(),
                    algorithm.name()
                )));
            }
            let x_train = x_model.select_rows(&train_idx);
            let outcome =
                grid_search_cv(&grid, &x_train, &train_y, cfg.folds, derive_seed(cfg.seed, 4))?;
            let x_hold = x_model.select_rows(&hold_idx);
            hold_scores = predict_scores(&outcome.model, &x_hold)?;
            params = to_param_arrays(&outcome.model);
            hyper = serde_json::to_value(&outcome.best_spec)
                .map_err(|e| Error::data(format!("hyperparameter serialization failed: {e}")))?;
            algorithm_tag = algorithm.name().into();
            grid_rows = Some(outcome.rows);
            val_row = None;
        }
    }

    let holdout_auc = auc_of(&hold_scores, &hold_labels)?;
    let runtime_s = started.elapsed().as_secs_f64();
    let mut rows = vec![ReportRow {
        feature_set: cfg.feature_set.name().into(),
        model: cfg.model.name(),
        split: "holdout".into(),
        auc: holdout_auc,
        n: hold_idx.len(),
        runtime_s,
        fingerprint: fingerprint.clone(),
    }];
    if let Some((val_auc, n_val)) = val_row {
        rows.push(ReportRow {
            feature_set: cfg.feature_set.name().into(),
            model: cfg.model.name(),
            split: "validation".into(),
            auc: val_auc,
            n: n_val,
            runtime_s,
            fingerprint: fingerprint.clone(),
        });
    }

    let artifact = ModelArtifact {
        algorithm: algorithm_tag,
        hyperparameters: hyper,
        feature_descriptor: serde_json::to_value(&descriptor)
            .map_err(|e| Error::data(format!("descriptor serialization failed: {e}")))?,
        fingerprint,
        params,
    };

    Ok(ExperimentOutcome {
        report: Report { rows },
        artifact,
        history,
        grid_rows,
        holdout_scores: hold_ids.into_iter().zip(hold_scores).collect(),
        holdout_auc,
    })
}

fn descriptor_of(artifact: &ModelArtifact) -> Result<FeatureDescriptor> {
    serde_json::from_value(artifact.feature_descriptor.clone())
        .map_err(|e| Error::data(format!("artifact feature descriptor is malformed: {e}")))
}

/// Scores every subject of a dataset with a persisted model, in dataset
/// order. Unlabeled subjects are fine; only the feature space must match.
pub fn predict_with_artifact(
    artifact: &ModelArtifact,
    ds: &Dataset,
) -> Result<Vec<(String, f64)>> {
    let descriptor = descriptor_of(artifact)?;
    let ds = align_length(ds, &descriptor)?;

    let scores = match artifact.algorithm.as_str() {
        "cnn1d" => {
            let cfg: Net1dConfig = serde_json::from_value(
                artifact
                    .hyperparameters
                    .get("net1d")
                    .cloned()
                    .ok_or_else(|| Error::data("cnn1d artifact lacks a net1d config"))?,
            )
            .map_err(|e| Error::data(format!("cnn1d artifact config malformed: {e}")))?;
            let net = Network1d::from_param_arrays(cfg, &artifact.params)?;
            let inputs = sequence_features(&ds, descriptor.feature_set, descriptor.band)?;
            predict_batch(&net, &inputs)?
        }
        "cnn3d" => {
            let cfg: Net3dConfig = serde_json::from_value(
                artifact
                    .hyperparameters
                    .get("net3d")
                    .cloned()
                    .ok_or_else(|| Error::data("cnn3d artifact lacks a net3d config"))?,
            )
            .map_err(|e| Error::data(format!("cnn3d artifact config malformed: {e}")))?;
            let net = Network3d::from_param_arrays(cfg, &artifact.params)?;
            let kind = descriptor
                .feature_set
                .tensor_kind()
                .ok_or_else(|| Error::data("cnn3d artifact without a tensor feature set"))?;
            let stft = descriptor.stft.clone().unwrap_or_default();
            let cwt = descriptor.cwt.clone().unwrap_or_default();
            let inputs = tensor_features(
                &ds,
                kind,
                &stft,
                &cwt,
                descriptor.downsample_time.unwrap_or(false),
            )?;
            predict_batch(&net, &inputs)?
        }
        _ => {
            let spec: ClassifierSpec = serde_json::from_value(artifact.hyperparameters.clone())
                .map_err(|e| Error::data(format!("classical artifact config malformed: {e}")))?;
            let model = from_param_arrays(&spec, &artifact.params)?;
            let x_all = fnc_matrix(&ds)?;
            let bounds = descriptor
                .normalization
                .as_ref()
                .ok_or_else(|| Error::data("connectivity artifact lacks normalization bounds"))?;
            let normalized = minmax_apply(bounds, &FeatureTable::new(x_all))?;
            let x = match &descriptor.selected {
                Some(sel) => normalized.x.select_cols(sel),
                None => normalized.x,
            };
            predict_scores(&model, &x)?
        }
    };
    Ok(ds
        .subjects()
        .iter()
        .map(|s| s.subject_id.clone())
        .zip(scores)
        .collect())
}

/// Pads shorter cohorts up to the model's expected length; longer cohorts are
/// a feature-space mismatch.
fn align_length(ds: &Dataset, descriptor: &FeatureDescriptor) -> Result<Dataset> {
    let Some(expected) = descriptor.input_length else {
        return Ok(ds.clone());
    };
    if ds.max_length() > expected {
        return Err(Error::data(format!(
            "feature-space mismatch: model was trained on length {expected}, data has length {}",
            ds.max_length()
        )));
    }
    if ds.max_length() == expected {
        return Ok(ds.clone());
    }
    let subjects = ds
        .subjects()
        .iter()
        .map(|s| {
            Ok(crate::dataio::SubjectRecord {
                subject_id: s.subject_id.clone(),
                label: s.label,
                icn: pad_icn(&s.icn, expected)?,
                fnc: s.fnc.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(subjects, ds.fs())
}

/// Joins a score list against a labeled set and computes AUC.
pub fn evaluate_scores(scores: &[(String, f64)], labeled: &[(String, bool)]) -> Result<f64> {
    let mut label_map = std::collections::HashMap::new();
    for (id, l) in labeled {
        label_map.insert(id.as_str(), *l);
    }
    let mut s = Vec::with_capacity(scores.len());
    let mut y = Vec::with_capacity(scores.len());
    for (id, score) in scores {
        let Some(&label) = label_map.get(id.as_str()) else {
            return Err(Error::data(format!(
                "subject {id:?} has a score but no label in the evaluation set"
            )));
        };
        s.push(*score);
        y.push(label);
    }
    auc_of(&s, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Conv1dSpec;

    fn quick_synth(n: usize, seed: u64) -> DataSource {
        DataSource::Synthetic(SynthConfig {
            n_subjects: n,
            length: 96,
            snr_db: 8.0,
            seed,
            ..SynthConfig::default()
        })
    }

    fn fast_train() -> TrainConfig {
        TrainConfig {
            epochs: 4,
            patience: 4,
            batch_size: 8,
            lr: 1e-2,
            ..TrainConfig::default()
        }
    }

    fn small_net1d() -> Net1dConfig {
        Net1dConfig {
            in_channels: crate::CHANNELS,
            convs: vec![Conv1dSpec {
                out_channels: 6,
                kernel: 5,
                pool_after: true,
            }],
        }
    }

    #[test]
    fn incompatible_pairings_are_rejected() {
        let mut cfg = ExperimentConfig {
            feature_set: FeatureSet::RawIcn,
            model: ModelChoice::Classical(Algorithm::Lda),
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate_pairing().is_err());
        cfg.feature_set = FeatureSet::Spectrogram;
        cfg.model = ModelChoice::Cnn1d;
        assert!(cfg.validate_pairing().is_err());
        cfg.feature_set = FeatureSet::FncAll;
        cfg.model = ModelChoice::Cnn3d;
        assert!(cfg.validate_pairing().is_err());
        cfg.model = ModelChoice::Classical(Algorithm::Gnb);
        assert!(cfg.validate_pairing().is_ok());
    }

    #[test]
    fn fingerprint_changes_with_any_module_config() {
        let base = ExperimentConfig::default();
        let fp = base.fingerprint();
        let mut changed = base.clone();
        changed.stft.hop = 20;
        assert_ne!(fp, changed.fingerprint());
        let mut changed = base.clone();
        changed.cwt.omega0 = 6.0;
        assert_ne!(fp, changed.fingerprint());
        let mut changed = base.clone();
        changed.train.patience = 19;
        assert_ne!(fp, changed.fingerprint());
        let mut changed = base.clone();
        changed.seed = 1;
        assert_ne!(fp, changed.fingerprint());
        assert_eq!(fp, base.fingerprint());
    }

    #[test]
    fn classical_fnc_experiment_round_trips_through_artifact() {
        let cfg = ExperimentConfig {
            data: quick_synth(24, 5),
            feature_set: FeatureSet::FncAll,
            model: ModelChoice::Classical(Algorithm::Lda),
            grid: Some(vec![ClassifierSpec::Lda { ridge: 1e-3 }]),
            folds: 3,
            seed: 7,
            ..ExperimentConfig::default()
        };
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.report.rows[0].split, "holdout");
        assert!(out.holdout_auc > 0.5, "auc {}", out.holdout_auc);
        assert!(out.grid_rows.is_some());

        // rescoring the same cohort through a saved-and-reloaded artifact
        // reproduces the holdout scores bit-identically
        let path = std::env::temp_dir().join(format!(
            "icnflow-pipeline-lda-{}.json",
            std::process::id()
        ));
        crate::dataio::save_model(&out.artifact, &path).unwrap();
        let reloaded = crate::dataio::load_model(&path).unwrap();
        let _ = std::fs::remove_file(&path);
        let ds = load_source(&cfg).unwrap();
        let scored = predict_with_artifact(&reloaded, &ds).unwrap();
        let by_id: std::collections::HashMap<&str, f64> =
            scored.iter().map(|(id, s)| (id.as_str(), *s)).collect();
        for (id, s) in &out.holdout_scores {
            assert_eq!(by_id[id.as_str()], *s, "subject {id}");
        }
    }

    #[test]
    fn fnc_top20_records_selected_features() {
        let cfg = ExperimentConfig {
            data: quick_synth(24, 6),
            feature_set: FeatureSet::FncTop20,
            model: ModelChoice::Classical(Algorithm::Gnb),
            grid: Some(vec![ClassifierSpec::Gnb { var_floor: 1e-9 }]),
            folds: 3,
            seed: 8,
            ..ExperimentConfig::default()
        };
        let out = run_experiment(&cfg).unwrap();
        let descriptor = descriptor_of(&out.artifact).unwrap();
        let selected = descriptor.selected.expect("selection recorded");
        assert_eq!(selected.len(), 20);
        // predict path consumes the selection
        let ds = load_source(&cfg).unwrap();
        let scored = predict_with_artifact(&out.artifact, &ds).unwrap();
        assert_eq!(scored.len(), 24);
    }

    #[test]
    fn cnn1d_experiment_reports_and_round_trips() {
        let cfg = ExperimentConfig {
            data: quick_synth(24, 9),
            feature_set: FeatureSet::RawIcn,
            model: ModelChoice::Cnn1d,
            train: fast_train(),
            net1d: small_net1d(),
            seed: 10,
            ..ExperimentConfig::default()
        };
        let out = run_experiment(&cfg).unwrap();
        assert!(out.history.is_some());
        assert_eq!(out.report.rows.len(), 2); // holdout + validation
        let path = std::env::temp_dir().join(format!(
            "icnflow-pipeline-cnn-{}.json",
            std::process::id()
        ));
        crate::dataio::save_model(&out.artifact, &path).unwrap();
        let reloaded = crate::dataio::load_model(&path).unwrap();
        let _ = std::fs::remove_file(&path);
        let ds = load_source(&cfg).unwrap();
        let scored = predict_with_artifact(&reloaded, &ds).unwrap();
        let by_id: std::collections::HashMap<&str, f64> =
            scored.iter().map(|(id, s)| (id.as_str(), *s)).collect();
        for (id, s) in &out.holdout_scores {
            assert_eq!(by_id[id.as_str()], *s);
        }
    }

    #[test]
    fn rerun_is_bit_identical() {
        let cfg = ExperimentConfig {
            data: quick_synth(20, 11),
            feature_set: FeatureSet::FncAll,
            model: ModelChoice::Classical(Algorithm::Knn),
            grid: Some(vec![ClassifierSpec::Knn { k: 3 }]),
            folds: 3,
            seed: 12,
            ..ExperimentConfig::default()
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.holdout_auc.to_bits(), b.holdout_auc.to_bits());
        assert_eq!(a.holdout_scores, b.holdout_scores);
        // report rows identical modulo the runtime column
        for (ra, rb) in a.report.rows.iter().zip(&b.report.rows) {
            assert_eq!(ra.auc.to_bits(), rb.auc.to_bits());
            assert_eq!(ra.fingerprint, rb.fingerprint);
        }
    }

    #[test]
    fn longer_cohort_is_a_feature_mismatch() {
        let cfg = ExperimentConfig {
            data: quick_synth(20, 13),
            feature_set: FeatureSet::RawIcn,
            model: ModelChoice::Cnn1d,
            train: fast_train(),
            net1d: small_net1d(),
            seed: 14,
            ..ExperimentConfig::default()
        };
        let out = run_experiment(&cfg).unwrap();
        let longer = generate_synthetic(&SynthConfig {
            n_subjects: 4,
            length: 120,
            seed: 15,
            ..SynthConfig::default()
        })
        .unwrap();
        let err = predict_with_artifact(&out.artifact, &longer).unwrap_err();
        assert!(err.to_string().contains("mismatch"), "{err}");
        // shorter cohorts are padded up and score fine
        let shorter = generate_synthetic(&SynthConfig {
            n_subjects: 4,
            length: 80,
            seed: 15,
            ..SynthConfig::default()
        })
        .unwrap();
        assert_eq!(
            predict_with_artifact(&out.artifact, &shorter).unwrap().len(),
            4
        );
    }

    #[test]
    fn evaluate_scores_joins_on_subject_id() {
        let scores = vec![("a".to_string(), 0.9), ("b".to_string(), 0.1)];
        let labels = vec![("b".to_string(), false), ("a".to_string(), true)];
        assert_eq!(evaluate_scores(&scores, &labels).unwrap(), 1.0);
        let missing = vec![("a".to_string(), true)];
        assert!(evaluate_scores(&scores, &missing).is_err());
    }

    #[test]
    fn report_csv_round_trips() {
        let report = Report {
            rows: vec![ReportRow {
                feature_set: "fnc_all".into(),
                model: "lda".into(),
                split: "holdout".into(),
                auc: 0.875,
                n: 32,
                runtime_s: 1.25,
                fingerprint: "abcd".into(),
            }],
        };
        let text = report.to_csv_string();
        let back = Report::from_csv_str(&text, "test").unwrap();
        assert_eq!(report, back);
        assert!(Report::from_csv_str("nope", "test").is_err());
    }

    #[test]
    fn downsample_halves_time_axis() {
        let mut t = Tensor3::zeros(2, 5, 3);
        for (i, v) in t.data_mut().iter_mut().enumerate() {
            *v = i as f64;
        }
        let d = downsample_time_axis(&t);
        assert_eq!(d.shape(), (2, 2, 3));
        assert_eq!(d.get(0, 0, 0), 0.5 * (t.get(0, 0, 0) + t.get(0, 1, 0)));
    }
}
