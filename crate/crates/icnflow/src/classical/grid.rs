//! Hyperparameter grid search over stratified cross-validation.

use super::{fit, predict_scores, Algorithm, ClassifierSpec, TrainedClassifier};
use crate::array::Mat;
use crate::error::{Error, Result};
use crate::eval::{auc_of, stratified_kfold};
use crate::rng::derive_seed;

/// Documented default grid per algorithm, in selection order.
pub fn default_grid(algorithm: Algorithm) -> Vec<ClassifierSpec> {
    match algorithm {
        Algorithm::Lr => [0.01, 0.1, 1.0, 10.0]
            .into_iter()
            .map(|l2| ClassifierSpec::Lr { l2 })
            .collect(),
        Algorithm::Svm => [0.01, 0.1, 1.0, 10.0]
            .into_iter()
            .map(|c| ClassifierSpec::Svm { c })
            .collect(),
        Algorithm::Lda => [1e-6, 1e-3, 1e-1]
            .into_iter()
            .map(|ridge| ClassifierSpec::Lda { ridge })
            .collect(),
        Algorithm::Gnb => [1e-9, 1e-6]
            .into_iter()
            .map(|var_floor| ClassifierSpec::Gnb { var_floor })
            .collect(),
        Algorithm::Knn => [3, 5, 7, 11]
            .into_iter()
            .map(|k| ClassifierSpec::Knn { k })
            .collect(),
        Algorithm::Dt => [Some(2), Some(4), Some(8), None]
            .into_iter()
            .map(|max_depth| ClassifierSpec::Dt { max_depth })
            .collect(),
        Algorithm::Rf => {
            let mut grid = Vec::new();
            for trees in [50, 100, 200] {
                for depth in [4, 8] {
                    grid.push(ClassifierSpec::rf(trees, Some(depth)));
                }
            }
            grid
        }
    }
}

/// One (grid point, fold) evaluation.
#[derive(Debug, Clone)]
pub struct GridCvRow {
    pub spec: ClassifierSpec,
    pub fold: usize,
    pub auc: f64,
}

/// Grid search result: the winning spec refitted on all data, plus the full
/// cross-validation table.
#[derive(Debug)]
pub struct GridSearchOutcome {
    pub best_spec: ClassifierSpec,
    pub best_mean_auc: f64,
    pub mean_auc: Vec<(ClassifierSpec, f64)>,
    pub rows: Vec<GridCvRow>,
    pub model: TrainedClassifier,
}

/// Evaluates every grid point with stratified k-fold CV (mean validation AUC)
/// and refits the best point on the full data. Ties keep the earliest grid
/// entry; everything is deterministic for a fixed seed.
pub fn grid_search_cv(
    grid: &[ClassifierSpec],
    x: &Mat,
    y: &[bool],
    folds: usize,
    seed: u64,
) -> Result<GridSearchOutcome> {
    if grid.is_empty() {
        return Err(Error::config("empty hyperparameter grid"));
    }
    let plan = stratified_kfold(y, folds, seed)?;

    let mut rows = Vec::with_capacity(grid.len() * folds);
    let mut mean_auc = Vec::with_capacity(grid.len());
    for (gi, spec) in grid.iter().enumerate() {
        let mut total = 0.0;
        for fold in 0..folds {
            let (train_idx, val_idx) = plan.fold(fold);
            let x_train = x.select_rows(&train_idx);
            let y_train: Vec<bool> = train_idx.iter().map(|&i| y[i]).collect();
            let x_val = x.select_rows(&val_idx);
            let y_val: Vec<bool> = val_idx.iter().map(|&i| y[i]).collect();
            let fit_seed = derive_seed(seed, ((gi as u64) << 16) | fold as u64);
            let model = fit(spec, &x_train, &y_train, fit_seed)?;
            let scores = predict_scores(&model, &x_val)?;
            let auc = auc_of(&scores, &y_val)?;
            rows.push(GridCvRow {
                spec: spec.clone(),
                fold,
                auc,
            });
            total += auc;
        }
        mean_auc.push((spec.clone(), total / folds as f64));
    }

    let (best_idx, &(_, best_mean)) = mean_auc
        .iter()
        .enumerate()
        .max_by(|(ia, (_, a)), (ib, (_, b))| {
            // strict ordering with first-wins ties: compare AUC, then prefer
            // the lower index
            a.partial_cmp(b).unwrap().then(ib.cmp(ia))
        })
        .unwrap();
    let best_spec = grid[best_idx].clone();
    let model = fit(&best_spec, x, y, derive_seed(seed, 0xF17))?;
    Ok(GridSearchOutcome {
        best_spec,
        best_mean_auc: best_mean,
        mean_auc,
        rows,
        model,
    })
}
