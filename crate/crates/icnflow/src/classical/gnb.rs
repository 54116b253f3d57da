//! Gaussian naive Bayes.

use super::Model;
use crate::array::Mat;

/// Per-class feature means and variances (maximum likelihood, floored).
pub(crate) fn fit(x: &Mat, y: &[bool], var_floor: f64) -> Model {
    let (n, d) = (x.rows(), x.cols());
    let mut count = [0usize; 2];
    let mut mean = [vec![0.0; d], vec![0.0; d]];
    for r in 0..n {
        let cls = y[r] as usize;
        count[cls] += 1;
        for (acc, &v) in mean[cls].iter_mut().zip(x.row(r)) {
            *acc += v;
        }
    }
    for cls in 0..2 {
        for v in &mut mean[cls] {
            *v /= count[cls] as f64;
        }
    }
    let mut var = [vec![0.0; d], vec![0.0; d]];
    for r in 0..n {
        let cls = y[r] as usize;
        for c in 0..d {
            let dev = x.get(r, c) - mean[cls][c];
            var[cls][c] += dev * dev;
        }
    }
    for cls in 0..2 {
        for v in &mut var[cls] {
            *v = (*v / count[cls] as f64).max(var_floor);
        }
    }
    let log_prior = [
        (count[0] as f64 / n as f64).ln(),
        (count[1] as f64 / n as f64).ln(),
    ];
    Model::Gnb {
        mean,
        var,
        log_prior,
    }
}

/// Positive-class posterior from the two class log-likelihoods.
pub(crate) fn posterior_positive(
    row: &[f64],
    mean: &[Vec<f64>; 2],
    var: &[Vec<f64>; 2],
    log_prior: &[f64; 2],
) -> f64 {
    let mut log_like = [log_prior[0], log_prior[1]];
    for cls in 0..2 {
        for (c, &v) in row.iter().enumerate() {
            let m = mean[cls][c];
            let s2 = var[cls][c];
            log_like[cls] += -0.5 * (2.0 * std::f64::consts::PI * s2).ln()
                - (v - m) * (v - m) / (2.0 * s2);
        }
    }
    let peak = log_like[0].max(log_like[1]);
    let e0 = (log_like[0] - peak).exp();
    let e1 = (log_like[1] - peak).exp();
    e1 / (e0 + e1)
}
