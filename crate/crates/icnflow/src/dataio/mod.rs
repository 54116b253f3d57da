//! Cohort ingestion, padding and persistence.
//!
//! A cohort lives on disk as a manifest CSV (`subject_id,label,icn_path`)
//! plus one CSV per subject holding the 105 channel time courses, one row per
//! channel, no header. Loading pads every subject with trailing zeros to the
//! cohort maximum length and remembers each pre-padding length so that
//! downstream correlation work can exclude the padding.

mod artifact;
mod synth;

pub use artifact::{fnv1a64, load_model, save_model, ModelArtifact, ParamArray};
pub use synth::{generate_synthetic, SynthConfig};

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::array::Mat;
use crate::error::{Error, Result};
use crate::fnc::FncVector;
use crate::CHANNELS;

/// Diagnostic class. `Sz` is the positive class (label 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Sz,
    Bp,
}

impl Label {
    pub fn as_bool(self) -> bool {
        matches!(self, Label::Sz)
    }

    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Sz
        } else {
            Label::Bp
        }
    }

    fn parse(s: &str) -> Result<Option<Self>> {
        match s {
            "SZ" => Ok(Some(Label::Sz)),
            "BP" => Ok(Some(Label::Bp)),
            "" => Ok(None),
            other => Err(Error::data(format!(
                "unknown label {other:?} (expected SZ, BP or empty)"
            ))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Sz => write!(f, "SZ"),
            Label::Bp => write!(f, "BP"),
        }
    }
}

/// One subject's channel time courses with sampling metadata.
///
/// Stored channel-major (one row per channel). `original_length` marks how
/// many leading columns are real samples; everything beyond is zero padding.
#[derive(Debug, Clone, PartialEq)]
pub struct IcnMatrix {
    data: Mat,
    fs: f64,
    original_length: usize,
}

impl IcnMatrix {
    pub fn new(data: Mat, fs: f64) -> Result<Self> {
        if data.cols() < 2 {
            return Err(Error::data(format!(
                "channel matrix needs at least 2 samples, got {}",
                data.cols()
            )));
        }
        if !(fs > 0.0) {
            return Err(Error::config(format!("sampling rate must be > 0, got {fs}")));
        }
        if !data.is_finite() {
            return Err(Error::numeric("channel matrix contains non-finite values"));
        }
        let original_length = data.cols();
        Ok(IcnMatrix {
            data,
            fs,
            original_length,
        })
    }

    pub fn channels(&self) -> usize {
        self.data.rows()
    }

    /// Total (padded) length in samples.
    pub fn len(&self) -> usize {
        self.data.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.cols() == 0
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Pre-padding sample count.
    pub fn original_length(&self) -> usize {
        self.original_length
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        self.data.row(c)
    }

    pub fn data(&self) -> &Mat {
        &self.data
    }

    /// Same metadata, new sample values (e.g. a filtered copy). The
    /// replacement must keep the shape.
    pub fn with_data(&self, data: Mat) -> IcnMatrix {
        assert_eq!(data.rows(), self.data.rows(), "channel count changed");
        assert_eq!(data.cols(), self.data.cols(), "length changed");
        IcnMatrix {
            data,
            fs: self.fs,
            original_length: self.original_length,
        }
    }
}

/// Appends zero columns so the matrix reaches `target_len` samples.
///
/// The first `original_length` columns are bit-identical to the input;
/// `original_length` itself is preserved across repeated padding.
pub fn pad_icn(icn: &IcnMatrix, target_len: usize) -> Result<IcnMatrix> {
    let cur = icn.len();
    if target_len < cur {
        return Err(Error::data(format!(
            "cannot pad {cur} samples down to {target_len}"
        )));
    }
    if target_len == cur {
        return Ok(icn.clone());
    }
    let mut out = Mat::zeros(icn.channels(), target_len);
    for c in 0..icn.channels() {
        out.row_mut(c)[..cur].copy_from_slice(icn.channel(c));
    }
    Ok(IcnMatrix {
        data: out,
        fs: icn.fs,
        original_length: icn.original_length,
    })
}

/// One subject: id, optional diagnosis, channel matrix, optional cached
/// connectivity vector.
#[derive(Debug, Clone)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub label: Option<Label>,
    pub icn: IcnMatrix,
    pub fnc: Option<FncVector>,
}

/// Ordered cohort with a uniform sampling rate and common padded length.
#[derive(Debug, Clone)]
pub struct Dataset {
    subjects: Vec<SubjectRecord>,
    fs: f64,
    max_length: usize,
}

impl Dataset {
    pub fn new(subjects: Vec<SubjectRecord>, fs: f64) -> Result<Self> {
        let max_length = subjects.iter().map(|s| s.icn.len()).max().unwrap_or(0);
        let mut seen = HashSet::new();
        for s in &subjects {
            if s.icn.len() != max_length {
                return Err(Error::data(format!(
                    "subject {} has length {}, expected the cohort maximum {max_length}",
                    s.subject_id,
                    s.icn.len()
                )));
            }
            if s.icn.channels() != CHANNELS {
                return Err(Error::data(format!(
                    "subject {} has {} channels, expected {CHANNELS}",
                    s.subject_id,
                    s.icn.channels()
                )));
            }
            if !seen.insert(s.subject_id.clone()) {
                return Err(Error::data(format!(
                    "duplicate subject_id {:?}",
                    s.subject_id
                )));
            }
        }
        Ok(Dataset {
            subjects,
            fs,
            max_length,
        })
    }

    pub fn subjects(&self) -> &[SubjectRecord] {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn max_length(&self) -> usize {
        self.max_length
    }

    /// Labels as booleans (`Sz` = true); `None` if any subject is unlabeled.
    pub fn labels(&self) -> Option<Vec<bool>> {
        self.subjects
            .iter()
            .map(|s| s.label.map(Label::as_bool))
            .collect()
    }
}

/// Loads a cohort from a manifest CSV.
///
/// The manifest must carry the exact header `subject_id,label,icn_path`;
/// `icn_path` entries are resolved relative to the manifest's directory.
/// Subjects are returned in manifest order, padded to the cohort maximum.
pub fn load_dataset(manifest_path: &Path, fs: f64) -> Result<Dataset> {
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|e| Error::io(manifest_path.to_path_buf(), e))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == "subject_id,label,icn_path" => {}
        Some((_, header)) => {
            return Err(Error::data_at(
                format!("bad manifest header {header:?}, expected \"subject_id,label,icn_path\""),
                manifest_path,
                Some(1),
            ))
        }
        None => {
            return Err(Error::data_at("empty manifest", manifest_path, None));
        }
    }

    let mut subjects = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::data_at(
                format!("expected 3 fields, found {}", fields.len()),
                manifest_path,
                Some(line_no),
            ));
        }
        let subject_id = fields[0].trim().to_string();
        if subject_id.is_empty() {
            return Err(Error::data_at(
                "empty subject_id",
                manifest_path,
                Some(line_no),
            ));
        }
        if !seen.insert(subject_id.clone()) {
            return Err(Error::data_at(
                format!("duplicate subject_id {subject_id:?}"),
                manifest_path,
                Some(line_no),
            ));
        }
        let label = Label::parse(fields[1].trim()).map_err(|e| match e {
            Error::Data { message, .. } => Error::Data {
                message,
                path: Some(manifest_path.to_path_buf()),
                line: Some(line_no),
            },
            other => other,
        })?;
        let icn_path = base.join(fields[2].trim());
        let mat = read_icn_csv(&icn_path)?;
        let icn = IcnMatrix::new(mat, fs)?;
        subjects.push(SubjectRecord {
            subject_id,
            label,
            icn,
            fnc: None,
        });
    }

    if subjects.is_empty() {
        return Err(Error::data_at(
            "manifest lists no subjects",
            manifest_path,
            None,
        ));
    }
    let max_length = subjects.iter().map(|s| s.icn.len()).max().unwrap();
    for s in &mut subjects {
        s.icn = pad_icn(&s.icn, max_length)?;
    }
    Dataset::new(subjects, fs)
}

/// Reads one subject CSV: exactly [`CHANNELS`] rows of equal length, finite
/// decimal values.
pub fn read_icn_csv(path: &Path) -> Result<Mat> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.to_path_buf(), e))?;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(CHANNELS);
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for cell in line.split(',') {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::data_at(
                    format!("non-numeric cell {:?}", cell.trim()),
                    path,
                    Some(line_no),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::data_at(
                    format!("non-finite value {v} rejected"),
                    path,
                    Some(line_no),
                ));
            }
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::data_at(
                    format!("row has {} values, expected {w}", row.len()),
                    path,
                    Some(line_no),
                ))
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.len() != CHANNELS {
        return Err(Error::data_at(
            format!("file has {} rows, expected exactly {CHANNELS}", rows.len()),
            path,
            None,
        ));
    }
    Ok(Mat::from_rows(&rows))
}

/// Writes a cohort back to disk in the manifest + per-subject CSV layout.
///
/// Creates `dir/manifest.csv` and `dir/icn/<subject_id>.csv`. When
/// `with_labels` is false the manifest label column is left empty (the
/// unlabeled test-set shape) and the true labels go to `dir/labels.csv`.
pub fn write_dataset(dataset: &Dataset, dir: &Path, with_labels: bool) -> Result<PathBuf> {
    let icn_dir = dir.join("icn");
    std::fs::create_dir_all(&icn_dir).map_err(|e| Error::io(icn_dir.clone(), e))?;
    let mut manifest = String::from("subject_id,label,icn_path\n");
    let mut truth = String::from("subject_id,label\n");
    for s in dataset.subjects() {
        let rel = format!("icn/{}.csv", s.subject_id);
        let label = s.label.map(|l| l.to_string()).unwrap_or_default();
        if with_labels {
            manifest.push_str(&format!("{},{},{}\n", s.subject_id, label, rel));
        } else {
            manifest.push_str(&format!("{},,{}\n", s.subject_id, rel));
        }
        truth.push_str(&format!("{},{}\n", s.subject_id, label));
        let mut body = String::new();
        for c in 0..s.icn.channels() {
            let row: Vec<String> = s.icn.channel(c).iter().map(|v| format!("{v}")).collect();
            body.push_str(&row.join(","));
            body.push('\n');
        }
        let p = icn_dir.join(format!("{}.csv", s.subject_id));
        std::fs::write(&p, body).map_err(|e| Error::io(p.clone(), e))?;
    }
    let manifest_path = dir.join("manifest.csv");
    std::fs::write(&manifest_path, manifest).map_err(|e| Error::io(manifest_path.clone(), e))?;
    if !with_labels {
        let truth_path = dir.join("labels.csv");
        std::fs::write(&truth_path, truth).map_err(|e| Error::io(truth_path.clone(), e))?;
    }
    Ok(manifest_path)
}
