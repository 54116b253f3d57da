//! Linear discriminant analysis with a ridge-regularized pooled covariance.
//!
//! The discriminant direction solves `(S + ridge I) w = mu1 - mu0` with S the
//! pooled within-class covariance. When the feature count exceeds the sample
//! count the solve goes through the Woodbury identity on the n x n Gram
//! matrix instead of the d x d covariance, which keeps 5460-dimensional
//! connectivity problems cheap and exact.

use super::Model;
use crate::array::Mat;
use crate::error::{Error, Result};

pub(crate) fn fit(x: &Mat, y: &[bool], ridge: f64) -> Result<Model> {
    let (n, d) = (x.rows(), x.cols());
    let n_pos = y.iter().filter(|&&l| l).count();
    let n_neg = n - n_pos;

    let mut mu = [vec![0.0; d], vec![0.0; d]];
    for r in 0..n {
        let m = &mut mu[y[r] as usize];
        for (acc, &v) in m.iter_mut().zip(x.row(r)) {
            *acc += v;
        }
    }
    for (class, count) in [(0usize, n_neg), (1usize, n_pos)] {
        for v in &mut mu[class] {
            *v /= count as f64;
        }
    }

    // centered rows scaled so that A^T A is the pooled covariance
    let denom = ((n - 2).max(1)) as f64;
    let mut a = Mat::zeros(n, d);
    for r in 0..n {
        let m = &mu[y[r] as usize];
        let row = a.row_mut(r);
        for c in 0..d {
            row[c] = (x.get(r, c) - m[c]) / denom.sqrt();
        }
    }

    let delta: Vec<f64> = (0..d).map(|c| mu[1][c] - mu[0][c]).collect();
    let w = if d <= n {
        solve_direct(&a, &delta, ridge)?
    } else {
        solve_woodbury(&a, &delta, ridge)?
    };

    let mid: f64 = (0..d).map(|c| 0.5 * (mu[0][c] + mu[1][c]) * w[c]).sum();
    let b = -mid + (n_pos as f64 / n_neg as f64).ln();
    Ok(Model::Linear { w, b })
}

/// Builds `A^T A + ridge I` explicitly and Cholesky-solves. O(n d^2 + d^3).
fn solve_direct(a: &Mat, delta: &[f64], ridge: f64) -> Result<Vec<f64>> {
    let (n, d) = (a.rows(), a.cols());
    let mut cov = vec![0.0; d * d];
    for r in 0..n {
        let row = a.row(r);
        for i in 0..d {
            let v = row[i];
            if v != 0.0 {
                for j in i..d {
                    cov[i * d + j] += v * row[j];
                }
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[i * d + j] = cov[j * d + i];
        }
        cov[i * d + i] += ridge;
    }
    cholesky_solve(&mut cov, d, delta)
}

/// Woodbury route: `(ridge I + A^T A)^-1 v = (v - A^T (ridge I_n + A A^T)^-1 A v) / ridge`.
/// O(n^2 d + n^3).
fn solve_woodbury(a: &Mat, delta: &[f64], ridge: f64) -> Result<Vec<f64>> {
    let n = a.rows();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let dotij: f64 = a.row(i).iter().zip(a.row(j)).map(|(x, y)| x * y).sum();
            gram[i * n + j] = dotij;
            gram[j * n + i] = dotij;
        }
    }
    for i in 0..n {
        gram[i * n + i] += ridge;
    }
    let av: Vec<f64> = (0..n).map(|r| dot(a.row(r), delta)).collect();
    let u = cholesky_solve(&mut gram, n, &av)?;
    let mut w = delta.to_vec();
    for (r, &ur) in u.iter().enumerate() {
        for (wv, &ar) in w.iter_mut().zip(a.row(r)) {
            *wv -= ur * ar;
        }
    }
    for wv in &mut w {
        *wv /= ridge;
    }
    Ok(w)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// In-place Cholesky factorization and solve of a symmetric positive-definite
/// system stored row-major.
fn cholesky_solve(m: &mut [f64], dim: usize, rhs: &[f64]) -> Result<Vec<f64>> {
    for i in 0..dim {
        for j in 0..=i {
            let mut s = m[i * dim + j];
            for k in 0..j {
                s -= m[i * dim + k] * m[j * dim + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::numeric(format!(
                        "covariance not positive definite at pivot {i} (value {s}); increase the ridge"
                    )));
                }
                m[i * dim + i] = s.sqrt();
            } else {
                m[i * dim + j] = s / m[j * dim + j];
            }
        }
    }
    // forward then backward substitution
    let mut z = rhs.to_vec();
    for i in 0..dim {
        for k in 0..i {
            z[i] -= m[i * dim + k] * z[k];
        }
        z[i] /= m[i * dim + i];
    }
    for i in (0..dim).rev() {
        for k in (i + 1)..dim {
            z[i] -= m[k * dim + i] * z[k];
        }
        z[i] /= m[i * dim + i];
    }
    Ok(z)
}
