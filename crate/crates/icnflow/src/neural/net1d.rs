//! 1D convolutional network over channel-by-time matrices.

use serde::{Deserialize, Serialize};

use super::{bce, sigmoid, NeuralNet};
use crate::array::Mat;
use crate::dataio::ParamArray;
use crate::error::{Error, Result};
use crate::rng::{chacha, derive_seed};
use rand::RngExt;

/// One convolution stage: same-padded odd kernel, stride 1, ReLU, and an
/// optional halving max-pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conv1dSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub pool_after: bool,
}

/// Architecture: convolution stack, then global average pooling over time, a
/// dense unit and a sigmoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Net1dConfig {
    pub in_channels: usize,
    pub convs: Vec<Conv1dSpec>,
}

impl Default for Net1dConfig {
    fn default() -> Self {
        Net1dConfig {
            in_channels: crate::CHANNELS,
            convs: vec![
                Conv1dSpec { out_channels: 32, kernel: 7, pool_after: true },
                Conv1dSpec { out_channels: 64, kernel: 5, pool_after: true },
                Conv1dSpec { out_channels: 64, kernel: 3, pool_after: false },
            ],
        }
    }
}

impl Net1dConfig {
    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 {
            return Err(Error::config("in_channels must be >= 1"));
        }
        for (i, c) in self.convs.iter().enumerate() {
            if c.out_channels == 0 {
                return Err(Error::config(format!("conv {i}: out_channels must be >= 1")));
            }
            if c.kernel == 0 || c.kernel % 2 == 0 {
                return Err(Error::config(format!(
                    "conv {i}: same padding needs an odd kernel, got {}",
                    c.kernel
                )));
            }
        }
        Ok(())
    }

    /// Temporal length after each stage (post-pool), given an input length.
    pub fn stage_lengths(&self, input_len: usize) -> Vec<usize> {
        let mut lens = Vec::with_capacity(self.convs.len());
        let mut l = input_len;
        for c in &self.convs {
            if c.pool_after {
                l /= 2;
            }
            lens.push(l);
        }
        lens
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Conv1d {
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    pool_after: bool,
    /// Weights indexed `[out][in][tap]`, row-major.
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Conv1d {
    #[inline]
    fn widx(&self, oc: usize, ic: usize, k: usize) -> usize {
        (oc * self.in_ch + ic) * self.kernel + k
    }

    /// Same-padded convolution, `out[oc][t] = b[oc] + sum w x[t + k - pad]`.
    fn forward(&self, x: &Mat) -> Mat {
        let len = x.cols();
        let pad = (self.kernel / 2) as isize;
        let mut out = Mat::zeros(self.out_ch, len);
        for oc in 0..self.out_ch {
            out.row_mut(oc).fill(self.b[oc]);
        }
        for oc in 0..self.out_ch {
            for ic in 0..self.in_ch {
                for k in 0..self.kernel {
                    let w = self.w[self.widx(oc, ic, k)];
                    let shift = k as isize - pad;
                    let (t0, t1) = valid_range(len, shift);
                    let s0 = (t0 as isize + shift) as usize;
                    let src = &x.row(ic)[s0..s0 + (t1 - t0)];
                    let dst = &mut out.row_mut(oc)[t0..t1];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += w * s;
                    }
                }
            }
        }
        out
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    fn backward(&self, x: &Mat, d_out: &Mat, gw: &mut [f64], gb: &mut [f64]) -> Mat {
        let len = x.cols();
        let pad = (self.kernel / 2) as isize;
        let mut d_in = Mat::zeros(self.in_ch, len);
        for oc in 0..self.out_ch {
            gb[oc] += d_out.row(oc).iter().sum::<f64>();
        }
        for oc in 0..self.out_ch {
            let g_row = d_out.row(oc);
            for ic in 0..self.in_ch {
                for k in 0..self.kernel {
                    let shift = k as isize - pad;
                    let (t0, t1) = valid_range(len, shift);
                    let s0 = (t0 as isize + shift) as usize;
                    let n = t1 - t0;
                    let grads = &g_row[t0..t1];

                    let mut acc = 0.0;
                    for (g, s) in grads.iter().zip(&x.row(ic)[s0..s0 + n]) {
                        acc += g * s;
                    }
                    gw[self.widx(oc, ic, k)] += acc;

                    let w = self.w[self.widx(oc, ic, k)];
                    for (d, g) in d_in.row_mut(ic)[s0..s0 + n].iter_mut().zip(grads) {
                        *d += w * g;
                    }
                }
            }
        }
        d_in
    }
}

#[inline]
fn valid_range(len: usize, shift: isize) -> (usize, usize) {
    if shift >= 0 {
        (0, len - shift as usize)
    } else {
        ((-shift) as usize, len)
    }
}

fn relu_inplace(m: &mut Mat) {
    for v in m.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Halving max-pool; ties take the earlier element. Returns the pooled matrix
/// and per-output argmax offsets.
fn maxpool2(m: &Mat) -> (Mat, Vec<u8>) {
    let out_len = m.cols() / 2;
    let mut out = Mat::zeros(m.rows(), out_len);
    let mut arg = vec![0u8; m.rows() * out_len];
    for c in 0..m.rows() {
        let row = m.row(c);
        for i in 0..out_len {
            let (a, b) = (row[2 * i], row[2 * i + 1]);
            if b > a {
                out.set(c, i, b);
                arg[c * out_len + i] = 1;
            } else {
                out.set(c, i, a);
            }
        }
    }
    (out, arg)
}

/// The full network with learned parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Network1d {
    config: Net1dConfig,
    convs: Vec<Conv1d>,
    dense_w: Vec<f64>,
    dense_b: f64,
}

impl Network1d {
    /// Kaiming-uniform initialization, biases zero, deterministic per seed.
    pub fn new(config: Net1dConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = chacha(derive_seed(seed, 0x1D));
        let mut convs = Vec::with_capacity(config.convs.len());
        let mut in_ch = config.in_channels;
        for spec in &config.convs {
            let fan_in = in_ch * spec.kernel;
            let bound = (6.0 / fan_in as f64).sqrt();
            let w = (0..spec.out_channels * in_ch * spec.kernel)
                .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound)
                .collect();
            convs.push(Conv1d {
                in_ch,
                out_ch: spec.out_channels,
                kernel: spec.kernel,
                pool_after: spec.pool_after,
                w,
                b: vec![0.0; spec.out_channels],
            });
            in_ch = spec.out_channels;
        }
        let bound = (6.0 / in_ch as f64).sqrt();
        let dense_w = (0..in_ch)
            .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound)
            .collect();
        Ok(Network1d {
            config,
            convs,
            dense_w,
            dense_b: 0.0,
        })
    }

    pub fn config(&self) -> &Net1dConfig {
        &self.config
    }

    /// Forward pass keeping per-stage values for backpropagation.
    fn forward_cached(&self, x: &Mat) -> Cache1d {
        let mut stages = Vec::with_capacity(self.convs.len());
        let mut current = x.clone();
        for conv in &self.convs {
            let pre = conv.forward(&current);
            let mut post = pre.clone();
            relu_inplace(&mut post);
            let (out, argmax) = if conv.pool_after {
                maxpool2(&post)
            } else {
                (post, Vec::new())
            };
            stages.push(Stage1d {
                input: current,
                pre,
                out: out.clone(),
                argmax,
            });
            current = out;
        }
        let len = current.cols() as f64;
        let gap: Vec<f64> = (0..current.rows())
            .map(|c| current.row(c).iter().sum::<f64>() / len)
            .collect();
        let z = self.dense_b
            + self
                .dense_w
                .iter()
                .zip(&gap)
                .map(|(w, g)| w * g)
                .sum::<f64>();
        Cache1d {
            stages,
            last: current,
            gap,
            p: sigmoid(z),
        }
    }

    pub fn to_param_arrays(&self) -> Vec<ParamArray> {
        let mut out = Vec::new();
        for (i, c) in self.convs.iter().enumerate() {
            out.push(ParamArray::new(
                format!("conv{i}.weight"),
                vec![c.out_ch, c.in_ch, c.kernel],
                c.w.clone(),
            ));
            out.push(ParamArray::new(
                format!("conv{i}.bias"),
                vec![c.out_ch],
                c.b.clone(),
            ));
        }
        out.push(ParamArray::new(
            "dense.weight",
            vec![self.dense_w.len()],
            self.dense_w.clone(),
        ));
        out.push(ParamArray::new("dense.bias", vec![1], vec![self.dense_b]));
        out
    }

    pub fn from_param_arrays(config: Net1dConfig, params: &[ParamArray]) -> Result<Self> {
        let mut net = Network1d::new(config, 0)?;
        let find = |name: &str| -> Result<&ParamArray> {
            params
                .iter()
                .find(|p| p.name == name)
                .ok_or_else(|| Error::data(format!("artifact missing parameter array {name:?}")))
        };
        for (i, c) in net.convs.iter_mut().enumerate() {
            let w = find(&format!("conv{i}.weight"))?;
            if w.data.len() != c.w.len() {
                return Err(Error::data(format!(
                    "conv{i}.weight has {} values, architecture expects {}",
                    w.data.len(),
                    c.w.len()
                )));
            }
            c.w = w.data.clone();
            c.b = find(&format!("conv{i}.bias"))?.data.clone();
        }
        net.dense_w = find("dense.weight")?.data.clone();
        net.dense_b = find("dense.bias")?.data[0];
        Ok(net)
    }
}

struct Stage1d {
    input: Mat,
    pre: Mat,
    out: Mat,
    argmax: Vec<u8>,
}

struct Cache1d {
    stages: Vec<Stage1d>,
    last: Mat,
    gap: Vec<f64>,
    p: f64,
}

impl NeuralNet for Network1d {
    type Input = Mat;

    fn param_len(&self) -> usize {
        self.convs
            .iter()
            .map(|c| c.w.len() + c.b.len())
            .sum::<usize>()
            + self.dense_w.len()
            + 1
    }

    fn params(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_len());
        for c in &self.convs {
            flat.extend_from_slice(&c.w);
            flat.extend_from_slice(&c.b);
        }
        flat.extend_from_slice(&self.dense_w);
        flat.push(self.dense_b);
        flat
    }

    fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_len());
        let mut at = 0;
        for c in &mut self.convs {
            let wn = c.w.len();
            c.w.copy_from_slice(&flat[at..at + wn]);
            at += wn;
            let bn = c.b.len();
            c.b.copy_from_slice(&flat[at..at + bn]);
            at += bn;
        }
        let dw = self.dense_w.len();
        self.dense_w.copy_from_slice(&flat[at..at + dw]);
        self.dense_b = flat[at + dw];
    }

    fn check_input(&self, x: &Mat) -> Result<()> {
        if x.rows() != self.config.in_channels {
            return Err(Error::data(format!(
                "network expects {} input channels, got {}",
                self.config.in_channels,
                x.rows()
            )));
        }
        if !x.is_finite() {
            return Err(Error::numeric("network input contains non-finite values"));
        }
        let mut len = x.cols();
        for (i, c) in self.config.convs.iter().enumerate() {
            if len == 0 {
                return Err(Error::data(format!(
                    "input of {} samples collapses to an empty signal before conv {i}",
                    x.cols()
                )));
            }
            if c.pool_after {
                len /= 2;
            }
        }
        if len == 0 {
            return Err(Error::data(format!(
                "input of {} samples collapses to an empty signal after pooling",
                x.cols()
            )));
        }
        Ok(())
    }

    fn predict_one(&self, x: &Mat) -> f64 {
        self.forward_cached(x).p
    }

    fn example_loss_grad(&self, x: &Mat, y: f64) -> (f64, Vec<f64>) {
        let cache = self.forward_cached(x);
        let loss = bce(cache.p, y);
        let dz = cache.p - y;

        let mut grad = vec![0.0; self.param_len()];
        let dense_at = self.param_len() - self.dense_w.len() - 1;
        for (c, g) in cache.gap.iter().enumerate() {
            grad[dense_at + c] = dz * g;
        }
        grad[self.param_len() - 1] = dz;

        // through global average pooling
        let last_len = cache.last.cols() as f64;
        let mut d_cur = Mat::zeros(cache.last.rows(), cache.last.cols());
        for c in 0..cache.last.rows() {
            let dv = dz * self.dense_w[c] / last_len;
            d_cur.row_mut(c).fill(dv);
        }

        // walk conv stages backwards; weight gradients land in `grad` at the
        // same offsets `params()` uses
        let mut offsets = Vec::with_capacity(self.convs.len());
        let mut at = 0;
        for c in &self.convs {
            offsets.push(at);
            at += c.w.len() + c.b.len();
        }
        for (i, conv) in self.convs.iter().enumerate().rev() {
            let stage = &cache.stages[i];
            // un-pool
            let mut d_relu = if conv.pool_after {
                let mut d = Mat::zeros(stage.pre.rows(), stage.pre.cols());
                let out_len = stage.out.cols();
                for c in 0..stage.pre.rows() {
                    for t in 0..out_len {
                        let src = 2 * t + stage.argmax[c * out_len + t] as usize;
                        d.set(c, src, d_cur.get(c, t));
                    }
                }
                d
            } else {
                d_cur
            };
            // ReLU mask from the pre-activation
            for (dv, &pre) in d_relu.data_mut().iter_mut().zip(stage.pre.data()) {
                if pre <= 0.0 {
                    *dv = 0.0;
                }
            }
            let (gw, gb) = grad[offsets[i]..offsets[i] + conv.w.len() + conv.b.len()]
                .split_at_mut(conv.w.len());
            d_cur = conv.backward(&stage.input, &d_relu, gw, gb);
        }
        (loss, grad)
    }
}
