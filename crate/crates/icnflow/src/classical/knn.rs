//! K-nearest neighbors.

use crate::array::Mat;

/// Fraction of positive labels among the k nearest stored rows (Euclidean).
/// Distance ties break by lower row index; k is capped at the stored sample
/// count so oversized grid values degrade to the global prevalence instead of
/// failing mid-search.
pub(crate) fn score(train: &Mat, y: &[bool], k: usize, row: &[f64]) -> f64 {
    let k = k.min(train.rows());
    let mut dist: Vec<(f64, usize)> = (0..train.rows())
        .map(|r| {
            let d: f64 = train
                .row(r)
                .iter()
                .zip(row)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d, r)
        })
        .collect();
    dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let positives = dist[..k].iter().filter(|&&(_, r)| y[r]).count();
    positives as f64 / k as f64
}
