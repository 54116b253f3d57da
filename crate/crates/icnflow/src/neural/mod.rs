//! Small convolutional networks with manual backpropagation.
//!
//! Two architectures: a 1D network over channel-by-time matrices and a 3D
//! network over subject tensors entering as a single input channel. Both end
//! in global average pooling, a dense unit and a sigmoid, so the output is a
//! probability in the open interval (0, 1). Gradients are computed layer by
//! layer by hand and checked against central finite differences in the test
//! suites.
//!
//! Training (see [`train`]) is full mini-batch Adam on mean binary
//! cross-entropy with an internal stratified validation split, early stopping
//! on validation loss, and bit-exact restoration of the best epoch's weights.
//! Per-example gradients inside a batch are evaluated in parallel and reduced
//! in index order, so results do not depend on thread scheduling.

mod net1d;
mod net3d;
mod train;

pub use net1d::{Conv1dSpec, Net1dConfig, Network1d};
pub use net3d::{Conv3dSpec, Net3dConfig, Network3d};
pub use train::{train, EpochStats, StopReason, TrainConfig, TrainHistory};

use rayon::prelude::*;

use crate::error::Result;

/// Probability clamp keeping sigmoid outputs inside the open interval and
/// the cross-entropy finite.
pub(crate) const PROB_EPS: f64 = 1e-12;

pub(crate) fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

pub(crate) fn bce(p: f64, y: f64) -> f64 {
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Common surface of the two network kinds: flat parameter access, a forward
/// probability and a per-example (loss, gradient) evaluation.
pub trait NeuralNet: Clone + Send + Sync {
    type Input: Sync;

    fn param_len(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, flat: &[f64]);

    /// Validates that an input flows through every stage with non-empty
    /// shapes.
    fn check_input(&self, x: &Self::Input) -> Result<()>;

    /// Forward probability in (0, 1).
    fn predict_one(&self, x: &Self::Input) -> f64;

    /// Per-example binary cross-entropy and its gradient over all parameters
    /// (flat, matching [`NeuralNet::params`] order).
    fn example_loss_grad(&self, x: &Self::Input, y: f64) -> (f64, Vec<f64>);
}

/// Forward probabilities for a batch, order-preserving.
pub fn predict_batch<N: NeuralNet>(net: &N, inputs: &[N::Input]) -> Result<Vec<f64>> {
    for x in inputs {
        net.check_input(x)?;
    }
    Ok(inputs.par_iter().map(|x| net.predict_one(x)).collect())
}

/// Mean loss over the indexed subset.
pub fn batch_loss<N: NeuralNet>(
    net: &N,
    inputs: &[N::Input],
    labels: &[f64],
    idx: &[usize],
) -> f64 {
    let total: f64 = idx
        .par_iter()
        .map(|&i| bce(net.predict_one(&inputs[i]), labels[i]))
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    total / idx.len() as f64
}

/// Mean loss and mean gradient over the indexed subset. Per-example work runs
/// in parallel; the reduction happens sequentially in index order.
pub fn batch_loss_and_grad<N: NeuralNet>(
    net: &N,
    inputs: &[N::Input],
    labels: &[f64],
    idx: &[usize],
) -> (f64, Vec<f64>) {
    let per_example: Vec<(f64, Vec<f64>)> = idx
        .par_iter()
        .map(|&i| net.example_loss_grad(&inputs[i], labels[i]))
        .collect();
    let b = idx.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; net.param_len()];
    for (l, g) in &per_example {
        loss += l;
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
    }
    for g in &mut grad {
        *g /= b;
    }
    (loss / b, grad)
}
