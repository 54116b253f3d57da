//! Time-frequency transforms and per-subject 3D stacking.
//!
//! Spectrograms use a sliding Tukey window with no boundary extension, so a
//! signal of length L yields `floor((L - W)/H) + 1` frames; power is
//! normalized by the window length so that, for a rectangular window at
//! hop = window, summing the one-sided bins (doubling all but DC and Nyquist)
//! recovers the energy of the covered samples.
//!
//! Scalograms correlate the signal with scaled copies of the complex Morlet
//! wavelet `psi(u) = pi^(-1/4) exp(i w0 u) exp(-u^2/2)`, L2-normalized by
//! `1/sqrt(scale)`, truncated at |u| <= 4 and zero-padded at the edges. A
//! tone at `f` Hz peaks near scale `w0 fs / (2 pi f)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::array::{Mat, Tensor3};
use crate::dataio::IcnMatrix;
use crate::error::{Error, Result};
use crate::CHANNELS;

/// Sliding-window spectrogram parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StftConfig {
    pub window_len: usize,
    pub tukey_alpha: f64,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig {
            window_len: 22,
            tukey_alpha: 0.25,
            hop: 21,
        }
    }
}

/// Wavelet transform parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CwtConfig {
    /// Strictly increasing positive scales, in samples.
    pub scales: Vec<f64>,
    /// Morlet center frequency in radians.
    pub omega0: f64,
}

impl Default for CwtConfig {
    fn default() -> Self {
        CwtConfig {
            scales: (1..=49).map(|s| s as f64).collect(),
            omega0: 5.0,
        }
    }
}

impl CwtConfig {
    fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(Error::config("scale list must not be empty"));
        }
        if self.scales[0] <= 0.0
            || self.scales.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::config(
                "scales must be strictly increasing and positive",
            ));
        }
        if !(self.omega0 > 0.0) {
            return Err(Error::config("omega0 must be > 0"));
        }
        Ok(())
    }

    /// Scale whose wavelet center frequency matches `f` Hz.
    pub fn scale_for_frequency(&self, f: f64, fs: f64) -> f64 {
        self.omega0 * fs / (2.0 * PI * f)
    }
}

/// Which transform a subject tensor was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorKind {
    Spectrogram,
    Scalogram,
}

/// Per-subject 3D stack: (frequency-or-scale, time, channel).
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectTensor {
    pub data: Tensor3,
    pub kind: TensorKind,
    pub provenance: TensorProvenance,
}

/// Config snapshot recorded with every tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorProvenance {
    pub kind: TensorKind,
    pub fs: f64,
    pub stft: Option<StftConfig>,
    pub cwt: Option<CwtConfig>,
}

/// Tapered-cosine window: flat center of fraction `1 - alpha`, cosine ramps,
/// zero endpoints for `alpha > 0`. `alpha = 0` is rectangular, `alpha = 1` is
/// Hann.
pub fn tukey_window(length: usize, alpha: f64) -> Result<Vec<f64>> {
    if length == 0 {
        return Err(Error::config("window length must be >= 1"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::config(format!(
            "tukey alpha must be in [0, 1], got {alpha}"
        )));
    }
    if length == 1 {
        return Ok(vec![1.0]);
    }
    let n1 = (length - 1) as f64;
    let mut w = vec![1.0; length];
    if alpha > 0.0 {
        let edge = alpha * n1 / 2.0;
        // first half computed, second half mirrored for exact symmetry
        let half = length.div_ceil(2);
        for (n, v) in w.iter_mut().enumerate().take(half) {
            let x = n as f64;
            if x < edge {
                *v = 0.5 * (1.0 + (PI * (x / edge - 1.0)).cos());
            }
        }
        for n in half..length {
            w[n] = w[length - 1 - n];
        }
    }
    Ok(w)
}

/// One-sided power spectrogram, `(window/2 + 1) x frames`.
///
/// Entry (f, n) is `|DFT(window * frame_n)[f]|^2 / window_len`.
pub fn stft_power_spectrogram(signal: &[f64], cfg: &StftConfig) -> Result<Mat> {
    let w = cfg.window_len;
    if w == 0 {
        return Err(Error::config("window length must be >= 1"));
    }
    if cfg.hop == 0 || cfg.hop > w {
        return Err(Error::config(format!(
            "hop must satisfy 1 <= hop <= window ({}), got {}",
            w, cfg.hop
        )));
    }
    if signal.len() < w {
        return Err(Error::data(format!(
            "signal of {} samples is shorter than the {}-sample window",
            signal.len(),
            w
        )));
    }
    let window = tukey_window(w, cfg.tukey_alpha)?;
    let n_bins = w / 2 + 1;
    let n_frames = (signal.len() - w) / cfg.hop + 1;

    // DFT basis for the one-sided bins
    let mut cos_t = vec![0.0; n_bins * w];
    let mut sin_t = vec![0.0; n_bins * w];
    for f in 0..n_bins {
        for t in 0..w {
            let ph = 2.0 * PI * (f * t) as f64 / w as f64;
            cos_t[f * w + t] = ph.cos();
            sin_t[f * w + t] = ph.sin();
        }
    }

    let mut out = Mat::zeros(n_bins, n_frames);
    let mut frame = vec![0.0; w];
    for n in 0..n_frames {
        let start = n * cfg.hop;
        for t in 0..w {
            frame[t] = signal[start + t] * window[t];
        }
        for f in 0..n_bins {
            let (mut re, mut im) = (0.0, 0.0);
            let (cs, sn) = (&cos_t[f * w..(f + 1) * w], &sin_t[f * w..(f + 1) * w]);
            for t in 0..w {
                re += frame[t] * cs[t];
                im -= frame[t] * sn[t];
            }
            out.set(f, n, (re * re + im * im) / w as f64);
        }
    }
    Ok(out)
}

/// Precomputed wavelet taps for every scale of a config.
struct WaveletBank {
    /// Per scale: (half-width, interleaved re/im taps for offsets -h..=h).
    taps: Vec<(i64, Vec<f64>)>,
}

impl WaveletBank {
    fn build(cfg: &CwtConfig) -> Self {
        let norm = PI.powf(-0.25);
        let taps = cfg
            .scales
            .iter()
            .map(|&s| {
                let h = (4.0 * s).floor() as i64;
                let mut tv = Vec::with_capacity((2 * h + 1) as usize * 2);
                for o in -h..=h {
                    let u = o as f64 / s;
                    let env = norm * (-u * u / 2.0).exp() / s.sqrt();
                    // conjugated wavelet: exp(-i w0 u)
                    tv.push(env * (cfg.omega0 * u).cos());
                    tv.push(-env * (cfg.omega0 * u).sin());
                }
                (h, tv)
            })
            .collect();
        WaveletBank { taps }
    }
}

/// Morlet scalogram, `scales x signal_length`, magnitude convention.
pub fn cwt_scalogram(signal: &[f64], cfg: &CwtConfig, _fs: f64) -> Result<Mat> {
    cfg.validate()?;
    if signal.is_empty() {
        return Err(Error::data("cannot transform an empty signal"));
    }
    let bank = WaveletBank::build(cfg);
    cwt_with_bank(signal, &bank)
}

fn cwt_with_bank(signal: &[f64], bank: &WaveletBank) -> Result<Mat> {
    let len = signal.len() as i64;
    let mut out = Mat::zeros(bank.taps.len(), signal.len());
    for (row, (h, taps)) in bank.taps.iter().enumerate() {
        let dst = out.row_mut(row);
        for (tau, d) in dst.iter_mut().enumerate() {
            let tau = tau as i64;
            let lo = (tau - h).max(0);
            let hi = (tau + h).min(len - 1);
            let (mut re, mut im) = (0.0, 0.0);
            let base = ((lo - tau + h) * 2) as usize;
            let sig = &signal[lo as usize..=hi as usize];
            let tp = &taps[base..base + sig.len() * 2];
            for (k, &x) in sig.iter().enumerate() {
                re += x * tp[2 * k];
                im += x * tp[2 * k + 1];
            }
            *d = (re * re + im * im).sqrt();
        }
    }
    Ok(out)
}

/// Applies the per-channel transform to all channels and stacks the results
/// along the last axis, preserving channel order.
pub fn stack_subject_tensor(
    icn: &IcnMatrix,
    kind: TensorKind,
    stft_cfg: &StftConfig,
    cwt_cfg: &CwtConfig,
) -> Result<SubjectTensor> {
    if icn.channels() != CHANNELS {
        return Err(Error::data(format!(
            "subject tensor expects {CHANNELS} channels, got {}",
            icn.channels()
        )));
    }
    let bank = match kind {
        TensorKind::Scalogram => {
            cwt_cfg.validate()?;
            Some(WaveletBank::build(cwt_cfg))
        }
        TensorKind::Spectrogram => None,
    };
    let slices: Vec<Mat> = (0..icn.channels())
        .into_par_iter()
        .map(|c| match kind {
            TensorKind::Spectrogram => stft_power_spectrogram(icn.channel(c), stft_cfg),
            TensorKind::Scalogram => cwt_with_bank(icn.channel(c), bank.as_ref().unwrap()),
        })
        .collect::<Result<_>>()?;

    let (d0, d1) = (slices[0].rows(), slices[0].cols());
    let mut data = Tensor3::zeros(d0, d1, icn.channels());
    for (c, m) in slices.iter().enumerate() {
        for i in 0..d0 {
            for j in 0..d1 {
                data.set(i, j, c, m.get(i, j));
            }
        }
    }
    Ok(SubjectTensor {
        data,
        kind,
        provenance: TensorProvenance {
            kind,
            fs: icn.fs(),
            stft: matches!(kind, TensorKind::Spectrogram).then(|| stft_cfg.clone()),
            cwt: matches!(kind, TensorKind::Scalogram).then(|| cwt_cfg.clone()),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{chacha, normal};
    use proptest::prelude::*;
    use rand::RngExt;

    #[test]
    fn tukey_alpha_zero_is_rectangular() {
        let w = tukey_window(22, 0.0).unwrap();
        assert!(w.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn tukey_alpha_one_is_hann() {
        let w = tukey_window(22, 1.0).unwrap();
        for (n, &v) in w.iter().enumerate() {
            let hann = 0.5 * (1.0 - (2.0 * PI * n as f64 / 21.0).cos());
            assert!((v - hann).abs() < 1e-12, "n {n}: {v} vs {hann}");
        }
    }

    #[test]
    fn tukey_quarter_alpha_shape() {
        // evaluated against the piecewise definition: zero endpoints, unit
        // flat center, exact symmetry
        let w = tukey_window(22, 0.25).unwrap();
        assert_eq!(w[0], 0.0);
        assert_eq!(w[21], 0.0);
        assert_eq!(w[10], 1.0);
        assert_eq!(w[11], 1.0);
        for k in 0..22 {
            assert_eq!(w[k], w[21 - k], "asymmetry at {k}");
        }
        // taper rises strictly inside the ramp
        assert!(w[1] > 0.0 && w[1] < w[2] && w[2] < 1.0);
    }

    #[test]
    fn tukey_bad_alpha_errors() {
        assert!(tukey_window(22, -0.1).is_err());
        assert!(tukey_window(22, 1.1).is_err());
        assert!(tukey_window(0, 0.5).is_err());
    }

    #[test]
    fn spectrogram_shape_for_default_config() {
        let signal = vec![0.5; 234];
        let m = stft_power_spectrogram(&signal, &StftConfig::default()).unwrap();
        assert_eq!((m.rows(), m.cols()), (12, 11));
    }

    #[test]
    fn spectrogram_of_zeros_is_zero() {
        let m = stft_power_spectrogram(&vec![0.0; 234], &StftConfig::default()).unwrap();
        assert!(m.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spectrogram_short_signal_errors() {
        let cfg = StftConfig::default();
        assert!(stft_power_spectrogram(&[0.0; 21], &cfg).is_err());
        assert!(stft_power_spectrogram(&[0.0; 22], &cfg).is_ok());
    }

    /// Brute-force DFT power of one windowed frame.
    fn frame_power_oracle(frame: &[f64], f: usize) -> f64 {
        let w = frame.len();
        let (mut re, mut im) = (0.0, 0.0);
        for (t, &x) in frame.iter().enumerate() {
            let ph = 2.0 * PI * (f * t) as f64 / w as f64;
            re += x * ph.cos();
            im -= x * ph.sin();
        }
        (re * re + im * im) / w as f64
    }

    #[test]
    fn sine_concentrates_in_expected_bin() {
        // 0.5 Hz at fs 2 sits between bins 5 and 6 of a 22-point window; the
        // dominant bin per frame must match the brute-force oracle, and the
        // nominal bin round(f W / fs) = 6 must dominate in aggregate.
        let fs = 2.0;
        let signal: Vec<f64> = (0..234)
            .map(|t| (2.0 * PI * 0.5 * t as f64 / fs).sin())
            .collect();
        let cfg = StftConfig {
            window_len: 22,
            tukey_alpha: 0.0,
            hop: 21,
        };
        let m = stft_power_spectrogram(&signal, &cfg).unwrap();
        let mut total = vec![0.0; m.rows()];
        for n in 0..m.cols() {
            let col: Vec<f64> = (0..m.rows()).map(|f| m.get(f, n)).collect();
            let argmax = col
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            // frame-level agreement with the oracle
            let frame: Vec<f64> = signal[n * 21..n * 21 + 22].to_vec();
            let oracle_argmax = (0..m.rows())
                .max_by(|&a, &b| {
                    frame_power_oracle(&frame, a)
                        .partial_cmp(&frame_power_oracle(&frame, b))
                        .unwrap()
                })
                .unwrap();
            assert_eq!(argmax, oracle_argmax, "frame {n}");
            assert!(argmax == 5 || argmax == 6, "frame {n} peaked at {argmax}");
            for (f, v) in col.iter().enumerate() {
                total[f] += v;
            }
        }
        let overall = total
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(overall, 6);
    }

    #[test]
    fn spectrogram_matches_frame_oracle_on_noise() {
        let mut rng = chacha(44);
        let signal: Vec<f64> = (0..100).map(|_| normal(&mut rng)).collect();
        let cfg = StftConfig {
            window_len: 16,
            tukey_alpha: 0.0,
            hop: 8,
        };
        let m = stft_power_spectrogram(&signal, &cfg).unwrap();
        assert_eq!(m.cols(), (100 - 16) / 8 + 1);
        for n in 0..m.cols() {
            let frame = &signal[n * 8..n * 8 + 16];
            for f in 0..m.rows() {
                let expect = frame_power_oracle(frame, f);
                assert!((m.get(f, n) - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rectangular_parseval() {
        let mut rng = chacha(7);
        for _ in 0..20 {
            let f = 0.05 + 0.9 * rng.random::<f64>();
            let signal: Vec<f64> = (0..220)
                .map(|t| (2.0 * PI * f * t as f64 / 2.0).sin() + 0.3 * normal(&mut rng))
                .collect();
            let cfg = StftConfig {
                window_len: 22,
                tukey_alpha: 0.0,
                hop: 22,
            };
            let m = stft_power_spectrogram(&signal, &cfg).unwrap();
            let mut spectral = 0.0;
            for n in 0..m.cols() {
                for fbin in 0..m.rows() {
                    let double = if fbin == 0 || fbin == m.rows() - 1 { 1.0 } else { 2.0 };
                    spectral += double * m.get(fbin, n);
                }
            }
            let covered = m.cols() * 22;
            let energy: f64 = signal[..covered].iter().map(|v| v * v).sum();
            assert!(
                (spectral - energy).abs() / energy < 1e-6,
                "{spectral} vs {energy}"
            );
        }
    }

    #[test]
    fn scalogram_shape_and_zeros() {
        let cfg = CwtConfig::default();
        let m = cwt_scalogram(&vec![0.0; 234], &cfg, 2.0).unwrap();
        assert_eq!((m.rows(), m.cols()), (49, 234));
        assert!(m.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalogram_empty_signal_errors() {
        assert!(cwt_scalogram(&[], &CwtConfig::default(), 2.0).is_err());
    }

    #[test]
    fn scalogram_bad_scales_error() {
        let cfg = CwtConfig {
            scales: vec![2.0, 2.0],
            omega0: 5.0,
        };
        assert!(cwt_scalogram(&[1.0, 2.0], &cfg, 2.0).is_err());
        let cfg = CwtConfig {
            scales: vec![-1.0, 2.0],
            omega0: 5.0,
        };
        assert!(cwt_scalogram(&[1.0, 2.0], &cfg, 2.0).is_err());
    }

    fn dominant_scale_row(m: &Mat) -> usize {
        // per-row mean over the central half
        let (lo, hi) = (m.cols() / 4, m.cols() - m.cols() / 4);
        (0..m.rows())
            .max_by(|&a, &b| {
                let ma: f64 = m.row(a)[lo..hi].iter().sum();
                let mb: f64 = m.row(b)[lo..hi].iter().sum();
                ma.partial_cmp(&mb).unwrap()
            })
            .unwrap()
    }

    #[test]
    fn quarter_hz_sine_peaks_at_expected_scale() {
        let fs = 2.0;
        let cfg = CwtConfig::default();
        let signal: Vec<f64> = (0..234)
            .map(|t| (2.0 * PI * 0.25 * t as f64 / fs).sin())
            .collect();
        let m = cwt_scalogram(&signal, &cfg, fs).unwrap();
        let peak = dominant_scale_row(&m); // scale = row + 1
        let expect = cfg.scale_for_frequency(0.25, fs).round() as usize;
        assert_eq!(expect, 6);
        assert!(
            (peak + 1).abs_diff(expect) <= 1,
            "peak at scale {} expected {expect}",
            peak + 1
        );
    }

    #[test]
    fn scalogram_time_shift_covariance() {
        let mut rng = chacha(21);
        let n = 160;
        let shift = 13usize;
        let x: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let mut shifted = vec![0.0; n];
        for t in 0..n {
            shifted[(t + shift) % n] = x[t];
        }
        let cfg = CwtConfig {
            scales: (1..=8).map(|s| s as f64).collect(),
            omega0: 5.0,
        };
        let a = cwt_scalogram(&x, &cfg, 2.0).unwrap();
        let b = cwt_scalogram(&shifted, &cfg, 2.0).unwrap();
        let margin = (4.0 * 8.0) as usize; // edge columns touched by the widest wavelet
        for row in 0..a.rows() {
            for tau in margin..n - margin {
                let tb = (tau + shift) % n;
                if tb < margin || tb >= n - margin {
                    continue;
                }
                assert!(
                    (a.get(row, tau) - b.get(row, tb)).abs() < 1e-6,
                    "row {row} tau {tau}"
                );
            }
        }
    }

    #[test]
    fn stacked_tensor_shapes_match_slices() {
        let mut rng = chacha(31);
        let rows: Vec<Vec<f64>> = (0..CHANNELS)
            .map(|_| (0..234).map(|_| normal(&mut rng)).collect())
            .collect();
        let icn = IcnMatrix::new(Mat::from_rows(&rows), 2.0).unwrap();
        let stft_cfg = StftConfig::default();
        let cwt_cfg = CwtConfig::default();

        let spec = stack_subject_tensor(&icn, TensorKind::Spectrogram, &stft_cfg, &cwt_cfg).unwrap();
        assert_eq!(spec.data.shape(), (12, 11, 105));
        assert!(spec.data.data().iter().all(|&v| v >= 0.0 && v.is_finite()));

        let scal = stack_subject_tensor(&icn, TensorKind::Scalogram, &stft_cfg, &cwt_cfg).unwrap();
        assert_eq!(scal.data.shape(), (49, 234, 105));
        assert!(scal.data.data().iter().all(|&v| v >= 0.0 && v.is_finite()));

        // slice k equals the standalone transform of channel k
        for &c in &[0usize, 52, 104] {
            let standalone = stft_power_spectrogram(icn.channel(c), &stft_cfg).unwrap();
            assert_eq!(spec.data.slice(2, c), standalone);
            let standalone = cwt_scalogram(icn.channel(c), &cwt_cfg, 2.0).unwrap();
            assert_eq!(scal.data.slice(2, c), standalone);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn frame_count_formula(len in 22usize..400, hop in 1usize..22) {
            let cfg = StftConfig { window_len: 22, tukey_alpha: 0.25, hop };
            let m = stft_power_spectrogram(&vec![1.0; len], &cfg).unwrap();
            prop_assert_eq!(m.cols(), (len - 22) / hop + 1);
            prop_assert_eq!(m.rows(), 12);
        }

        #[test]
        fn spectrogram_nonnegative(seed in 0u64..500) {
            let mut rng = chacha(seed);
            let signal: Vec<f64> = (0..80).map(|_| normal(&mut rng)).collect();
            let cfg = StftConfig { window_len: 16, tukey_alpha: 0.5, hop: 7 };
            let m = stft_power_spectrogram(&signal, &cfg).unwrap();
            prop_assert!(m.data().iter().all(|&v| v >= 0.0 && v.is_finite()));
        }
    }
}
