//! Connectivity features and univariate selection.
//!
//! A subject's connectivity vector is the flattened lower triangle of the
//! pairwise Pearson correlation matrix over its 105 channels, in row-major
//! order over pairs (i, j) with i > j: (1,0), (2,0), (2,1), (3,0), ...
//! Correlations only use the real (pre-padding) samples. Selection works on
//! min-max normalized feature tables via a class-conditional chi-square score.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::array::Mat;
use crate::dataio::IcnMatrix;
use crate::error::{Error, Result};
use crate::{CHANNELS, FNC_LEN};

/// Flattened lower-triangle connectivity vector (length 5460, values in [-1, 1]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FncVector(Vec<f64>);

impl FncVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != FNC_LEN {
            return Err(Error::data(format!(
                "connectivity vector has {} entries, expected {FNC_LEN}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|&&v| !(-1.0..=1.0).contains(&v)) {
            return Err(Error::numeric(format!(
                "correlation value {v} outside [-1, 1]"
            )));
        }
        Ok(FncVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

/// Position of pair (i, j), i > j, in the flattened lower triangle.
pub fn pair_index(i: usize, j: usize) -> usize {
    assert!(i > j, "lower triangle wants i > j, got ({i}, {j})");
    i * (i - 1) / 2 + j
}

/// Inverse of [`pair_index`].
pub fn index_pair(idx: usize) -> (usize, usize) {
    let mut i = 1;
    while (i + 1) * i / 2 <= idx {
        i += 1;
    }
    (i, idx - i * (i - 1) / 2)
}

/// Sample Pearson correlation of two equal-length vectors.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::data(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::data("correlation needs at least 2 samples"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::numeric(
            "constant input has zero variance; correlation undefined",
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Connectivity vector of one subject, over the unpadded samples only.
pub fn compute_fnc(icn: &IcnMatrix) -> Result<FncVector> {
    if icn.channels() != CHANNELS {
        return Err(Error::data(format!(
            "connectivity expects {CHANNELS} channels, got {}",
            icn.channels()
        )));
    }
    let t = icn.original_length();
    if t < 2 {
        return Err(Error::data("need at least 2 real samples per channel"));
    }

    // per-channel means and centered norms first; constant channels are
    // reported by index
    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(CHANNELS);
    let mut norms = Vec::with_capacity(CHANNELS);
    for c in 0..CHANNELS {
        let sig = &icn.channel(c)[..t];
        let mean = sig.iter().sum::<f64>() / t as f64;
        let dev: Vec<f64> = sig.iter().map(|v| v - mean).collect();
        let ss: f64 = dev.iter().map(|v| v * v).sum();
        if ss == 0.0 {
            return Err(Error::numeric(format!(
                "channel {c} is constant over the unpadded region; correlation undefined"
            )));
        }
        norms.push(ss.sqrt());
        centered.push(dev);
    }

    let values: Vec<f64> = (1..CHANNELS)
        .into_par_iter()
        .flat_map_iter(|i| {
            let centered = &centered;
            let norms = &norms;
            (0..i).map(move |j| {
                let dot: f64 = centered[i]
                    .iter()
                    .zip(&centered[j])
                    .map(|(a, b)| a * b)
                    .sum();
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            })
        })
        .collect();
    FncVector::new(values)
}

/// Feature table: one row per subject.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub x: Mat,
    /// Stable identifiers (flat feature indices into the original space).
    pub feature_ids: Vec<usize>,
}

impl FeatureTable {
    pub fn new(x: Mat) -> Self {
        let ids = (0..x.cols()).collect();
        FeatureTable { x, feature_ids: ids }
    }
}

/// Per-feature (min, max) fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinmaxBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Fits per-feature bounds on the given table (training rows only).
pub fn minmax_fit(table: &FeatureTable) -> MinmaxBounds {
    let (n, d) = (table.x.rows(), table.x.cols());
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for r in 0..n {
        for (c, &v) in table.x.row(r).iter().enumerate() {
            lo[c] = lo[c].min(v);
            hi[c] = hi[c].max(v);
        }
    }
    MinmaxBounds { lo, hi }
}

/// Applies fitted bounds: `(x - min) / (max - min)` clamped into [0, 1];
/// constant features map to 0.
pub fn minmax_apply(bounds: &MinmaxBounds, table: &FeatureTable) -> Result<FeatureTable> {
    let d = table.x.cols();
    if bounds.lo.len() != d {
        return Err(Error::data(format!(
            "bounds cover {} features, table has {d}",
            bounds.lo.len()
        )));
    }
    let mut out = table.x.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        for c in 0..d {
            let span = bounds.hi[c] - bounds.lo[c];
            row[c] = if span > 0.0 {
                ((row[c] - bounds.lo[c]) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
    }
    Ok(FeatureTable {
        x: out,
        feature_ids: table.feature_ids.clone(),
    })
}

/// Chi-square score per feature on a normalized table.
///
/// Observed mass per class is the class-wise column sum; expected mass is the
/// column total split by class prevalence. Features whose column sums to zero
/// score zero.
pub fn chi2_scores(table: &FeatureTable, labels: &[bool]) -> Result<Vec<f64>> {
    let (n, d) = (table.x.rows(), table.x.cols());
    if labels.len() != n {
        return Err(Error::data(format!(
            "{n} rows but {} labels",
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::data("chi-square scoring needs both classes present"));
    }
    for r in 0..n {
        if let Some(c) = table.x.row(r).iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::data(format!(
                "feature table must be normalized to [0, 1] (row {r}, column {c})"
            )));
        }
    }

    let frac_pos = n_pos as f64 / n as f64;
    let mut observed_pos = vec![0.0; d];
    let mut total = vec![0.0; d];
    for r in 0..n {
        let row = table.x.row(r);
        if labels[r] {
            for c in 0..d {
                observed_pos[c] += row[c];
            }
        }
        for c in 0..d {
            total[c] += row[c];
        }
    }

    let mut scores = vec![0.0; d];
    for c in 0..d {
        if total[c] == 0.0 {
            continue;
        }
        let e_pos = frac_pos * total[c];
        let e_neg = (1.0 - frac_pos) * total[c];
        let o_pos = observed_pos[c];
        let o_neg = total[c] - o_pos;
        scores[c] = (o_pos - e_pos).powi(2) / e_pos + (o_neg - e_neg).powi(2) / e_neg;
    }
    Ok(scores)
}

/// Ranked top-k selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub scores: Vec<f64>,
    /// Indices of the k best scores, descending score, ties broken by lower
    /// index.
    pub selected: Vec<usize>,
}

pub fn select_top_k(scores: &[f64], k: usize) -> Result<SelectionResult> {
    if k == 0 || k > scores.len() {
        return Err(Error::config(format!(
            "k = {k} out of range for {} features",
            scores.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    order.truncate(k);
    Ok(SelectionResult {
        scores: scores.to_vec(),
        selected: order,
    })
}

/// Writes a connectivity cache: one row per subject, [`FNC_LEN`] columns.
pub fn write_fnc_cache(path: &Path, rows: &[(String, FncVector)]) -> Result<()> {
    let mut text = String::new();
    for (id, v) in rows {
        let cells: Vec<String> = v.values().iter().map(|x| format!("{x}")).collect();
        text.push_str(&format!("{id},{}\n", cells.join(",")));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path.to_path_buf(), e))
}

/// Reads a connectivity cache written by [`write_fnc_cache`].
pub fn read_fnc_cache(path: &Path) -> Result<Vec<(String, FncVector)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.to_path_buf(), e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let id = parts.next().unwrap_or_default().to_string();
        let values: Vec<f64> = parts
            .map(|c| {
                c.trim().parse::<f64>().map_err(|_| {
                    Error::data_at(format!("non-numeric cell {:?}", c.trim()), path, Some(idx + 1))
                })
            })
            .collect::<Result<_>>()?;
        out.push((id, FncVector::new(values)?));
    }
    Ok(out)
}
