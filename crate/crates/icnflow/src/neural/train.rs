//! Mini-batch Adam training with early stopping.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{batch_loss_and_grad, bce, NeuralNet};
use crate::error::{Error, Result};
use crate::eval::{auc_of, stratified_split};
use crate::rng::{chacha, derive_seed};

/// Optimizer and schedule settings.
///
/// The validation split is `stratified_split(labels, val_fraction, seed)`;
/// weight initialization and epoch shuffles derive their own streams from the
/// same seed, so a config pins the entire run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Consecutive epochs without a validation-loss improvement before
    /// stopping.
    pub patience: usize,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 100,
            batch_size: 32,
            patience: 20,
            val_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0 < self.val_fraction && self.val_fraction < 1.0) {
            return Err(Error::config(format!(
                "validation fraction must be in (0, 1), got {}",
                self.val_fraction
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::config("epochs and batch size must be >= 1"));
        }
        if self.patience > self.epochs {
            return Err(Error::config(format!(
                "patience {} exceeds the epoch budget {}",
                self.patience, self.epochs
            )));
        }
        if !(self.lr > 0.0) {
            return Err(Error::config("learning rate must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_auc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// Zero-based epoch whose weights were restored.
    pub best_epoch: usize,
    pub stop: StopReason,
}

impl TrainHistory {
    /// CSV export: `epoch,train_loss,val_loss,val_auc`, one-based epochs.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,val_auc\n");
        for (i, e) in self.epochs.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                i + 1,
                e.train_loss,
                e.val_loss,
                e.val_auc
            ));
        }
        out
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, cfg: &TrainConfig, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let b1t = 1.0 - cfg.beta1.powi(self.t as i32);
        let b2t = 1.0 - cfg.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / b1t;
            let v_hat = self.v[i] / b2t;
            params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

/// Trains a network.
///
/// Splits off a stratified validation set, runs shuffled mini-batches with
/// Adam for at most `epochs` epochs, stops early after `patience` epochs
/// without a strict validation-loss improvement, and restores the best
/// epoch's weights bit-exactly before returning.
pub fn train<N: NeuralNet>(
    mut net: N,
    inputs: &[N::Input],
    labels: &[bool],
    cfg: &TrainConfig,
) -> Result<(N, TrainHistory)> {
    cfg.validate()?;
    if inputs.len() != labels.len() {
        return Err(Error::data(format!(
            "{} inputs but {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    for x in inputs {
        net.check_input(x)?;
    }
    let (train_idx, val_idx) = stratified_split(labels, cfg.val_fraction, cfg.seed)?;
    let val_labels: Vec<bool> = val_idx.iter().map(|&i| labels[i]).collect();
    let y: Vec<f64> = labels.iter().map(|&l| l as u8 as f64).collect();

    let mut adam = Adam::new(net.param_len());
    let mut shuffle_rng = chacha(derive_seed(cfg.seed, 1));
    let mut order = train_idx.clone();

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best_params = net.params();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut since_best = 0usize;
    let mut stop = StopReason::MaxEpochs;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grad) = batch_loss_and_grad(&net, inputs, &y, batch);
            epoch_loss += loss * batch.len() as f64;
            let mut params = net.params();
            adam.step(cfg, &mut params, &grad);
            net.set_params(&params);
        }
        let train_loss = epoch_loss / order.len() as f64;

        let val_inputs: Vec<&N::Input> = val_idx.iter().map(|&i| &inputs[i]).collect();
        let val_scores: Vec<f64> = val_inputs.iter().map(|x| net.predict_one(x)).collect();
        let val_loss = val_scores
            .iter()
            .zip(&val_idx)
            .map(|(&p, &i)| bce(p, y[i]))
            .sum::<f64>()
            / val_idx.len() as f64;
        let val_auc = auc_of(&val_scores, &val_labels)?;
        history.push(EpochStats {
            train_loss,
            val_loss,
            val_auc,
        });

        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_params = net.params();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                stop = StopReason::EarlyStop;
                break;
            }
        }
    }

    net.set_params(&best_params);
    Ok((
        net,
        TrainHistory {
            epochs: history,
            best_epoch,
            stop,
        },
    ))
}
