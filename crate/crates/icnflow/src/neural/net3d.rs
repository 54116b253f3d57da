//! 3D convolutional network over subject tensors.
//!
//! The tensor enters as one input channel with spatial axes
//! (frequency-or-scale, time, channel-of-origin). Kept deliberately smaller
//! than the 1D network: volumetric convolutions are two orders of magnitude
//! more expensive per subject.

use serde::{Deserialize, Serialize};

use super::{bce, sigmoid, NeuralNet};
use crate::array::Tensor3;
use crate::dataio::ParamArray;
use crate::error::{Error, Result};
use crate::rng::{chacha, derive_seed};
use rand::RngExt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conv3dSpec {
    pub out_channels: usize,
    /// Cubic kernel edge, odd.
    pub kernel: usize,
    pub pool_after: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Net3dConfig {
    pub convs: Vec<Conv3dSpec>,
}

impl Default for Net3dConfig {
    fn default() -> Self {
        Net3dConfig {
            convs: vec![
                Conv3dSpec { out_channels: 8, kernel: 3, pool_after: true },
                Conv3dSpec { out_channels: 16, kernel: 3, pool_after: false },
            ],
        }
    }
}

impl Net3dConfig {
    pub fn validate(&self) -> Result<()> {
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
}

/// Multichannel volume, flat index `((c dx + x) dy + y) dz + z`.
#[derive(Debug, Clone, PartialEq)]
struct Vol {
    ch: usize,
    dx: usize,
    dy: usize,
    dz: usize,
    data: Vec<f64>,
}

impl Vol {
    fn zeros(ch: usize, dx: usize, dy: usize, dz: usize) -> Self {
        Vol {
            ch,
            dx,
            dy,
            dz,
            data: vec![0.0; ch * dx * dy * dz],
        }
    }

    fn from_tensor(t: &Tensor3) -> Self {
        let (dx, dy, dz) = t.shape();
        Vol {
            ch: 1,
            dx,
            dy,
            dz,
            data: t.data().to_vec(),
        }
    }

    #[inline]
    fn base(&self, c: usize, x: usize, y: usize) -> usize {
        ((c * self.dx + x) * self.dy + y) * self.dz
    }

    fn voxels(&self) -> usize {
        self.dx * self.dy * self.dz
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Conv3d {
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    pool_after: bool,
    /// Weights indexed `[out][in][kx][ky][kz]`, row-major.
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Conv3d {
    #[inline]
    fn widx(&self, oc: usize, ic: usize, kx: usize, ky: usize, kz: usize) -> usize {
        let k = self.kernel;
        ((((oc * self.in_ch) + ic) * k + kx) * k + ky) * k + kz
    }

    fn forward(&self, v: &Vol) -> Vol {
        let (dx, dy, dz) = (v.dx, v.dy, v.dz);
        let pad = (self.kernel / 2) as isize;
        let mut out = Vol::zeros(self.out_ch, dx, dy, dz);
        for oc in 0..self.out_ch {
            let start = out.base(oc, 0, 0);
            out.data[start..start + v.voxels()].fill(self.b[oc]);
        }
        for oc in 0..self.out_ch {
            for ic in 0..self.in_ch {
                for kx in 0..self.kernel {
                    let sx = kx as isize - pad;
                    let (x0, x1) = valid(dx, sx);
                    for ky in 0..self.kernel {
                        let sy = ky as isize - pad;
                        let (y0, y1) = valid(dy, sy);
                        for kz in 0..self.kernel {
                            let sz = kz as isize - pad;
                            let (z0, z1) = valid(dz, sz);
                            let w = self.w[self.widx(oc, ic, kx, ky, kz)];
                            for x in x0..x1 {
                                for y in y0..y1 {
                                    let ob = out.base(oc, x, y);
                                    let ib = v.base(
                                        ic,
                                        (x as isize + sx) as usize,
                                        (y as isize + sy) as usize,
                                    );
                                    let start = (ib as isize + sz + z0 as isize) as usize;
                                    let src = &v.data[start..start + (z1 - z0)];
                                    let dst = &mut out.data[ob + z0..ob + z1];
                                    for (d, s) in dst.iter_mut().zip(src) {
                                        *d += w * s;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn backward(&self, v: &Vol, d_out: &Vol, gw: &mut [f64], gb: &mut [f64]) -> Vol {
        let (dx, dy, dz) = (v.dx, v.dy, v.dz);
        let pad = (self.kernel / 2) as isize;
        let mut d_in = Vol::zeros(self.in_ch, dx, dy, dz);
        for oc in 0..self.out_ch {
            let start = d_out.base(oc, 0, 0);
            gb[oc] += d_out.data[start..start + d_out.voxels()].iter().sum::<f64>();
        }
        for oc in 0..self.out_ch {
            for ic in 0..self.in_ch {
                for kx in 0..self.kernel {
                    let sx = kx as isize - pad;
                    let (x0, x1) = valid(dx, sx);
                    for ky in 0..self.kernel {
                        let sy = ky as isize - pad;
                        let (y0, y1) = valid(dy, sy);
                        for kz in 0..self.kernel {
                            let sz = kz as isize - pad;
                            let (z0, z1) = valid(dz, sz);
                            let wi = self.widx(oc, ic, kx, ky, kz);
                            let w = self.w[wi];
                            let mut acc = 0.0;
                            for x in x0..x1 {
                                for y in y0..y1 {
                                    let gb_ = d_out.base(oc, x, y);
                                    let ib = d_in.base(
                                        ic,
                                        (x as isize + sx) as usize,
                                        (y as isize + sy) as usize,
                                    );
                                    let start = (ib as isize + sz + z0 as isize) as usize;
                                    let n = z1 - z0;
                                    let grad_row = &d_out.data[gb_ + z0..gb_ + z1];
                                    let src_row = &v.data[start..start + n];
                                    for (g, s) in grad_row.iter().zip(src_row) {
                                        acc += g * s;
                                    }
                                    let dst = &mut d_in.data[start..start + n];
                                    for (d, g) in dst.iter_mut().zip(grad_row) {
                                        *d += w * g;
                                    }
                                }
                            }
                            gw[wi] += acc;
                        }
                    }
                }
            }
        }
        d_in
    }
}

#[inline]
fn valid(len: usize, shift: isize) -> (usize, usize) {
    if shift >= 0 {
        (0, len - shift as usize)
    } else {
        ((-shift) as usize, len)
    }
}

fn relu_inplace(v: &mut Vol) {
    for x in &mut v.data {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// 2x2x2 max-pool with floored output dims; argmax offsets packed into three
/// bits (x, y, z), ties resolved toward the lowest offset.
fn maxpool3(v: &Vol) -> (Vol, Vec<u8>) {
    let (ox, oy, oz) = (v.dx / 2, v.dy / 2, v.dz / 2);
    let mut out = Vol::zeros(v.ch, ox, oy, oz);
    let mut arg = vec![0u8; v.ch * ox * oy * oz];
    let mut at = 0;
    for c in 0..v.ch {
        for x in 0..ox {
            for y in 0..oy {
                for z in 0..oz {
                    let mut best = f64::NEG_INFINITY;
                    let mut code = 0u8;
                    for bx in 0..2usize {
                        for by in 0..2usize {
                            for bz in 0..2usize {
                                let val = v.data
                                    [v.base(c, 2 * x + bx, 2 * y + by) + 2 * z + bz];
                                if val > best {
                                    best = val;
                                    code = ((bx << 2) | (by << 1) | bz) as u8;
                                }
                            }
                        }
                    }
                    let at_out = out.base(c, x, y) + z;
                    out.data[at_out] = best;
                    arg[at] = code;
                    at += 1;
                }
            }
        }
    }
    (out, arg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network3d {
    config: Net3dConfig,
    convs: Vec<Conv3d>,
    dense_w: Vec<f64>,
    dense_b: f64,
}

impl Network3d {
    pub fn new(config: Net3dConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = chacha(derive_seed(seed, 0x3D));
        let mut convs = Vec::with_capacity(config.convs.len());
        let mut in_ch = 1;
        for spec in &config.convs {
            let fan_in = in_ch * spec.kernel * spec.kernel * spec.kernel;
            let bound = (6.0 / fan_in as f64).sqrt();
            let w = (0..spec.out_channels * fan_in)
                .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound)
                .collect();
            convs.push(Conv3d {
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
        Ok(Network3d {
            config,
            convs,
            dense_w,
            dense_b: 0.0,
        })
    }

    pub fn config(&self) -> &Net3dConfig {
        &self.config
    }

    fn forward_cached(&self, x: &Tensor3) -> Cache3d {
        let mut stages = Vec::with_capacity(self.convs.len());
        let mut current = Vol::from_tensor(x);
        for conv in &self.convs {
            let pre = conv.forward(&current);
            let mut post = pre.clone();
            relu_inplace(&mut post);
            let (out, argmax) = if conv.pool_after {
                maxpool3(&post)
            } else {
                (post, Vec::new())
            };
            stages.push(Stage3d {
                input: current,
                pre,
                out: out.clone(),
                argmax,
            });
            current = out;
        }
        let vox = current.voxels() as f64;
        let gap: Vec<f64> = (0..current.ch)
            .map(|c| {
                let start = current.base(c, 0, 0);
                current.data[start..start + current.voxels()].iter().sum::<f64>() / vox
            })
            .collect();
        let z = self.dense_b
            + self
                .dense_w
                .iter()
                .zip(&gap)
                .map(|(w, g)| w * g)
                .sum::<f64>();
        Cache3d {
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
                vec![c.out_ch, c.in_ch, c.kernel, c.kernel, c.kernel],
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

    pub fn from_param_arrays(config: Net3dConfig, params: &[ParamArray]) -> Result<Self> {
        let mut net = Network3d::new(config, 0)?;
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

struct Stage3d {
    input: Vol,
    pre: Vol,
    out: Vol,
    argmax: Vec<u8>,
}

struct Cache3d {
    stages: Vec<Stage3d>,
    last: Vol,
    gap: Vec<f64>,
    p: f64,
}

impl NeuralNet for Network3d {
    type Input = Tensor3;

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

    fn check_input(&self, x: &Tensor3) -> Result<()> {
        let (dx, dy, dz) = x.shape();
        if dx == 0 || dy == 0 || dz == 0 {
            return Err(Error::data("empty tensor"));
        }
        if !x.data().iter().all(|v| v.is_finite()) {
            return Err(Error::numeric("network input contains non-finite values"));
        }
        let (mut ax, mut ay, mut az) = (dx, dy, dz);
        for (i, c) in self.config.convs.iter().enumerate() {
            if c.pool_after {
                ax /= 2;
                ay /= 2;
                az /= 2;
                if ax == 0 || ay == 0 || az == 0 {
                    return Err(Error::data(format!(
                        "tensor {dx}x{dy}x{dz} collapses to an empty volume at pool {i}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn predict_one(&self, x: &Tensor3) -> f64 {
        self.forward_cached(x).p
    }

    fn example_loss_grad(&self, x: &Tensor3, y: f64) -> (f64, Vec<f64>) {
        let cache = self.forward_cached(x);
        let loss = bce(cache.p, y);
        let dz = cache.p - y;

        let mut grad = vec![0.0; self.param_len()];
        let dense_at = self.param_len() - self.dense_w.len() - 1;
        for (c, g) in cache.gap.iter().enumerate() {
            grad[dense_at + c] = dz * g;
        }
        grad[self.param_len() - 1] = dz;

        let vox = cache.last.voxels() as f64;
        let mut d_cur = Vol::zeros(cache.last.ch, cache.last.dx, cache.last.dy, cache.last.dz);
        for c in 0..cache.last.ch {
            let dv = dz * self.dense_w[c] / vox;
            let start = d_cur.base(c, 0, 0);
            let vx = d_cur.voxels();
            d_cur.data[start..start + vx].fill(dv);
        }

        let mut offsets = Vec::with_capacity(self.convs.len());
        let mut at = 0;
        for c in &self.convs {
            offsets.push(at);
            at += c.w.len() + c.b.len();
        }
        for (i, conv) in self.convs.iter().enumerate().rev() {
            let stage = &cache.stages[i];
            let mut d_relu = if conv.pool_after {
                let mut d = Vol::zeros(stage.pre.ch, stage.pre.dx, stage.pre.dy, stage.pre.dz);
                let (ox, oy, oz) = (stage.out.dx, stage.out.dy, stage.out.dz);
                let mut ai = 0;
                for c in 0..stage.out.ch {
                    for x in 0..ox {
                        for y in 0..oy {
                            for z in 0..oz {
                                let code = stage.argmax[ai] as usize;
                                ai += 1;
                                let (bx, by, bz) = (code >> 2 & 1, code >> 1 & 1, code & 1);
                                let src = d.base(c, 2 * x + bx, 2 * y + by) + 2 * z + bz;
                                d.data[src] = d_cur.data[d_cur.base(c, x, y) + z];
                            }
                        }
                    }
                }
                d
            } else {
                d_cur
            };
            for (dv, &pre) in d_relu.data.iter_mut().zip(&stage.pre.data) {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::gradcheck::max_rel_error;
    use crate::rng::{chacha, normal};

    pub(crate) fn random_tensor(dx: usize, dy: usize, dz: usize, seed: u64) -> Tensor3 {
        let mut rng = chacha(seed);
        let mut t = Tensor3::zeros(dx, dy, dz);
        for v in t.data_mut() {
            *v = normal(&mut rng);
        }
        t
    }

    fn small_config() -> Net3dConfig {
        Net3dConfig {
            convs: vec![
                Conv3dSpec { out_channels: 2, kernel: 3, pool_after: true },
                Conv3dSpec { out_channels: 3, kernel: 3, pool_after: false },
            ],
        }
    }

    #[test]
    fn zero_parameters_output_half() {
        let mut net = Network3d::new(Net3dConfig::default(), 0).unwrap();
        net.set_params(&vec![0.0; net.param_len()]);
        let x = random_tensor(6, 8, 5, 1);
        assert_eq!(net.predict_one(&x), 0.5);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in [1u64, 2, 3] {
            let net = Network3d::new(small_config(), seed).unwrap();
            let inputs: Vec<Tensor3> =
                (0..2).map(|i| random_tensor(5, 6, 4, seed * 10 + i)).collect();
            let labels = vec![1.0, 0.0];
            let err = max_rel_error(&net, &inputs, &labels, 1e-5);
            assert!(err < 1e-4, "seed {seed}: max rel error {err}");
        }
    }

    #[test]
    fn pool_shrinks_dims_by_floor_halving() {
        let net = Network3d::new(small_config(), 2).unwrap();
        // 7x6x5 -> 3x3x2 after the single pool stage; still valid
        assert!(net.check_input(&random_tensor(7, 6, 5, 3)).is_ok());
        // 1x6x5 collapses along x
        assert!(net.check_input(&random_tensor(1, 6, 5, 4)).is_err());
    }

    #[test]
    fn params_round_trip_through_arrays() {
        let net = Network3d::new(small_config(), 5).unwrap();
        let arrays = net.to_param_arrays();
        let back = Network3d::from_param_arrays(small_config(), &arrays).unwrap();
        assert_eq!(net.params(), back.params());
        let x = random_tensor(5, 6, 4, 6);
        assert_eq!(net.predict_one(&x), back.predict_one(&x));
    }
}
