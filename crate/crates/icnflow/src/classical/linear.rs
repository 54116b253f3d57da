//! Logistic regression and linear SVM.

use super::Model;
use crate::array::Mat;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(1e-12, 1.0 - 1e-12)
}

/// Numerically stable `log(1 + exp(-m))` used by the logistic loss, where
/// `m = z` for positives and `-z` for negatives.
fn log_loss_margin(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

const LR_MAX_ITER: usize = 5000;
const LR_GRAD_TOL: f64 = 1e-6;

/// Full-batch gradient descent with backtracking line search on the
/// L2-regularized mean logistic loss
/// `J = mean(log(1 + exp(-m_i z_i))) + l2 ||w||^2 / (2n)`.
/// Stops at gradient norm `1e-6` or 5000 iterations.
pub(crate) fn fit_logistic(x: &Mat, y: &[bool], l2: f64) -> Model {
    let (n, d) = (x.rows(), x.cols());
    let nf = n as f64;
    let mut w = vec![0.0; d];
    let mut b = 0.0;

    let objective = |w: &[f64], b: f64| -> f64 {
        let mut loss = 0.0;
        for r in 0..n {
            let z = dot(w, x.row(r)) + b;
            let m = if y[r] { z } else { -z };
            loss += log_loss_margin(m);
        }
        loss / nf + l2 * dot(w, w) / (2.0 * nf)
    };

    let mut step = 1.0f64;
    for _ in 0..LR_MAX_ITER {
        // gradient of the mean loss
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for r in 0..n {
            let z = dot(&w, x.row(r)) + b;
            let resid = sigmoid_unclamped(z) - (y[r] as u8 as f64);
            for (g, &xv) in gw.iter_mut().zip(x.row(r)) {
                *g += resid * xv;
            }
            gb += resid;
        }
        for (g, &wv) in gw.iter_mut().zip(&w) {
            *g = *g / nf + l2 * wv / nf;
        }
        gb /= nf;

        let grad_sq = dot(&gw, &gw) + gb * gb;
        if grad_sq.sqrt() <= LR_GRAD_TOL {
            break;
        }

        // Armijo backtracking from the last accepted step
        let j0 = objective(&w, b);
        step = (step * 2.0).min(1e6);
        loop {
            let wt: Vec<f64> = w.iter().zip(&gw).map(|(wv, g)| wv - step * g).collect();
            let bt = b - step * gb;
            if objective(&wt, bt) <= j0 - 0.5 * step * grad_sq {
                w = wt;
                b = bt;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                return Model::Linear { w, b };
            }
        }
    }
    Model::Linear { w, b }
}

fn sigmoid_unclamped(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

const SVM_ITER: usize = 2000;

/// Hinge-loss linear SVM by deterministic full-batch subgradient descent
/// (Pegasos-style step schedule and ball projection) on
/// `J = lambda/2 ||w||^2 + mean(max(0, 1 - m_i (w.x_i + b)))`,
/// `lambda = 1 / (c n)`. The score interface stays uniform by squashing the
/// margin through a sigmoid; AUC only consumes the ranking.
pub(crate) fn fit_svm(x: &Mat, y: &[bool], c: f64) -> Model {
    let (n, d) = (x.rows(), x.cols());
    let nf = n as f64;
    let lambda = 1.0 / (c * nf);
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; d];
    let mut b = 0.0;

    for t in 1..=SVM_ITER {
        let eta = 1.0 / (lambda * t as f64);
        let mut gw: Vec<f64> = w.iter().map(|wv| lambda * wv).collect();
        let mut gb = 0.0;
        for r in 0..n {
            let m = if y[r] { 1.0 } else { -1.0 };
            if m * (dot(&w, x.row(r)) + b) < 1.0 {
                for (g, &xv) in gw.iter_mut().zip(x.row(r)) {
                    *g -= m * xv / nf;
                }
                gb -= m / nf;
            }
        }
        for (wv, g) in w.iter_mut().zip(&gw) {
            *wv -= eta * g;
        }
        b -= eta * gb;

        let norm = dot(&w, &w).sqrt();
        if norm > radius {
            let scale = radius / norm;
            for wv in &mut w {
                *wv *= scale;
            }
        }
    }
    Model::Linear { w, b }
}
