//! Scoring and data-splitting: rank-based AUC, stratified holdout splits and
//! stratified k-fold plans.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{chacha, derive_seed};

/// Paired score/label vectors, validated on construction.
#[derive(Debug, Clone)]
pub struct ScoredLabels {
    scores: Vec<f64>,
    labels: Vec<bool>,
}

impl ScoredLabels {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::data(format!(
                "scores ({}) and labels ({}) differ in length",
                scores.len(),
                labels.len()
            )));
        }
        if scores.is_empty() {
            return Err(Error::data("empty score vector"));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::numeric(format!("non-finite score at index {i}")));
        }
        Ok(ScoredLabels { scores, labels })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }
}

/// Area under the ROC curve via the Mann-Whitney rank statistic.
///
/// Equal scores across the class boundary receive half credit. The rank path
/// runs in O(n log n) and produces the exact same value as counting all
/// positive/negative pairs, because the numerator (wins + ties/2) is a
/// half-integer computed without rounding.
pub fn auc(sl: &ScoredLabels) -> Result<f64> {
    let n = sl.scores.len();
    let n_pos = sl.labels.iter().filter(|&&l| l).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::data(
            "AUC requires both classes present in the labels",
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sl.scores[a].partial_cmp(&sl.scores[b]).unwrap());

    // average ranks over tie groups, 1-based
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && sl.scores[order[j]] == sl.scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if sl.labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }

    let n_pos_f = n_pos as f64;
    let u = rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0;
    Ok(u / (n_pos_f * n_neg as f64))
}

/// Convenience wrapper over [`auc`].
pub fn auc_of(scores: &[f64], labels: &[bool]) -> Result<f64> {
    auc(&ScoredLabels::new(scores.to_vec(), labels.to_vec())?)
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Splits indices into (train, holdout) with per-class proportions.
///
/// Each class is shuffled independently and cut at `round(n_c * fraction)`
/// (half-up). Errors if either class would be absent from either side.
/// Returned index lists are sorted ascending.
pub fn stratified_split(
    labels: &[bool],
    holdout_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0 < holdout_fraction && holdout_fraction < 1.0) {
        return Err(Error::config(format!(
            "holdout fraction must be in (0, 1), got {holdout_fraction}"
        )));
    }
    let mut train = Vec::new();
    let mut holdout = Vec::new();
    for (class_tag, class) in [false, true].into_iter().enumerate() {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let n_c = idx.len();
        if n_c < 2 {
            return Err(Error::data(format!(
                "class {} has {} member(s); need at least 2 to split",
                class as u8, n_c
            )));
        }
        let h = round_half_up(n_c as f64 * holdout_fraction);
        if h == 0 || h == n_c {
            return Err(Error::data(format!(
                "class {} too small ({} members) to appear on both sides at fraction {}",
                class as u8, n_c, holdout_fraction
            )));
        }
        let mut rng = chacha(derive_seed(seed, class_tag as u64));
        idx.shuffle(&mut rng);
        holdout.extend_from_slice(&idx[..h]);
        train.extend_from_slice(&idx[h..]);
    }
    train.sort_unstable();
    holdout.sort_unstable();
    Ok((train, holdout))
}

/// Assignment of every index to one of `k` folds, stratified by class.
#[derive(Debug, Clone)]
pub struct FoldPlan {
    assignments: Vec<usize>,
    k: usize,
    seed: u64,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// (train, validation) index lists for one fold, both sorted ascending.
    pub fn fold(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        assert!(fold < self.k);
        let mut train = Vec::new();
        let mut val = Vec::new();
        for (i, &f) in self.assignments.iter().enumerate() {
            if f == fold {
                val.push(i);
            } else {
                train.push(i);
            }
        }
        (train, val)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Builds a stratified k-fold plan.
///
/// Classes are shuffled independently and dealt round-robin onto folds with a
/// cursor shared across classes, so overall fold sizes differ by at most one
/// and per-class counts stay within one of proportional.
pub fn stratified_kfold(labels: &[bool], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::config(format!(
            "k-fold needs k >= 2, got {k} (k = 1 is a degenerate CV)"
        )));
    }
    let mut assignments = vec![usize::MAX; labels.len()];
    let mut cursor = 0;
    for (class_tag, class) in [false, true].into_iter().enumerate() {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(Error::data(format!(
                "class {} has {} member(s), fewer than k = {k}",
                class as u8,
                idx.len()
            )));
        }
        let mut rng = chacha(derive_seed(seed, 1000 + class_tag as u64));
        idx.shuffle(&mut rng);
        for i in idx {
            assignments[i] = cursor % k;
            cursor += 1;
        }
    }
    Ok(FoldPlan {
        assignments,
        k,
        seed,
    })
}
