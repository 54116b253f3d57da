//! Seeded synthetic cohorts.
//!
//! Stands in for withheld clinical data. Each subject is smooth Gaussian
//! channel noise; the subject's class plants two kinds of structure on its
//! coupled channel set: a class-specific tone (random phase, amplitude set by
//! `snr_db`) and a shared narrowband latent source centered on the same tone
//! frequency. Spectral content and cross-channel correlation therefore both
//! separate the classes, and the discriminative energy stays confined near
//! the class tone frequencies.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{Dataset, IcnMatrix, Label, SubjectRecord};
use crate::array::Mat;
use crate::error::{Error, Result};
use crate::rng::{chacha, derive_seed, normal};
use crate::CHANNELS;

/// Synthetic cohort parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_subjects: usize,
    /// Samples per channel.
    pub length: usize,
    pub fs: f64,
    /// Fraction of subjects labeled SZ.
    pub class_balance: f64,
    /// Tone power over unit noise power, in dB.
    pub snr_db: f64,
    pub seed: u64,
    pub sz_tone_hz: f64,
    pub bp_tone_hz: f64,
    pub sz_coupled_channels: Vec<usize>,
    pub bp_coupled_channels: Vec<usize>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_subjects: 40,
            length: 234,
            fs: 2.0,
            class_balance: 0.5,
            snr_db: 6.0,
            seed: 0,
            sz_tone_hz: 0.50,
            bp_tone_hz: 0.15,
            sz_coupled_channels: vec![10, 11, 12, 13, 14],
            bp_coupled_channels: vec![40, 41, 42, 43, 44],
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.n_subjects < 2 {
            return Err(Error::config(format!(
                "need at least 2 subjects, got {}",
                self.n_subjects
            )));
        }
        if self.length < 2 {
            return Err(Error::config(format!(
                "length must be >= 2 samples, got {}",
                self.length
            )));
        }
        if !(self.fs > 0.0) {
            return Err(Error::config("sampling rate must be > 0"));
        }
        if !(0.0 < self.class_balance && self.class_balance < 1.0) {
            return Err(Error::config(format!(
                "class balance must be in (0, 1), got {}",
                self.class_balance
            )));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::config("snr_db must be finite"));
        }
        for (name, tone) in [("sz_tone_hz", self.sz_tone_hz), ("bp_tone_hz", self.bp_tone_hz)] {
            if !(0.0 < tone && tone < self.fs / 2.0) {
                return Err(Error::config(format!(
                    "{name} = {tone} must lie in (0, fs/2 = {})",
                    self.fs / 2.0
                )));
            }
        }
        for (name, set) in [
            ("sz_coupled_channels", &self.sz_coupled_channels),
            ("bp_coupled_channels", &self.bp_coupled_channels),
        ] {
            if set.is_empty() {
                return Err(Error::config(format!("{name} must not be empty")));
            }
            if let Some(&bad) = set.iter().find(|&&c| c >= CHANNELS) {
                return Err(Error::config(format!(
                    "{name} contains channel {bad}, valid range is 0..{CHANNELS}"
                )));
            }
        }
        Ok(())
    }

    fn n_sz(&self) -> usize {
        let n = (self.n_subjects as f64 * self.class_balance + 0.5).floor() as usize;
        n.clamp(1, self.n_subjects - 1)
    }
}

// AR(1) smoothing coefficient for the per-channel background noise.
const AR_RHO: f64 = 0.3;
const LATENT_COMPONENTS: usize = 8;
const LATENT_BAND_HZ: f64 = 0.08;

fn ar1_noise(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let scale = (1.0 - AR_RHO * AR_RHO).sqrt();
    let mut out = Vec::with_capacity(len);
    let mut prev = normal(rng);
    out.push(prev);
    for _ in 1..len {
        prev = AR_RHO * prev + scale * normal(rng);
        out.push(prev);
    }
    out
}

/// Generates a cohort; bit-identical for a fixed config.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let n_sz = cfg.n_sz();
    let mut subjects = Vec::with_capacity(cfg.n_subjects);
    let tone_amp = (2.0 * 10f64.powf(cfg.snr_db / 10.0)).sqrt();

    for i in 0..cfg.n_subjects {
        let label = if i < n_sz { Label::Sz } else { Label::Bp };
        let (tone_hz, coupled) = match label {
            Label::Sz => (cfg.sz_tone_hz, &cfg.sz_coupled_channels),
            Label::Bp => (cfg.bp_tone_hz, &cfg.bp_coupled_channels),
        };
        let mut rng = chacha(derive_seed(cfg.seed, i as u64));

        let mut mat = Mat::zeros(CHANNELS, cfg.length);
        for c in 0..CHANNELS {
            mat.row_mut(c).copy_from_slice(&ar1_noise(&mut rng, cfg.length));
        }

        // class tone, one phase per subject shared across coupled channels
        let tone_phase = rng.random::<f64>() * 2.0 * PI;

        // narrowband latent source around the class tone; unit expected power
        let f_lo = (tone_hz - LATENT_BAND_HZ).max(0.02);
        let f_hi = (tone_hz + LATENT_BAND_HZ).min(0.49 * cfg.fs);
        let mut latent_parts = Vec::with_capacity(LATENT_COMPONENTS);
        for _ in 0..LATENT_COMPONENTS {
            let f = f_lo + rng.random::<f64>() * (f_hi - f_lo);
            let amp = 0.5 * normal(&mut rng);
            let phase = rng.random::<f64>() * 2.0 * PI;
            latent_parts.push((f, amp, phase));
        }

        for &c in coupled {
            let row = mat.row_mut(c);
            for (t, v) in row.iter_mut().enumerate() {
                let time = t as f64 / cfg.fs;
                let mut add = tone_amp * (2.0 * PI * tone_hz * time + tone_phase).sin();
                for &(f, a, ph) in &latent_parts {
                    add += a * (2.0 * PI * f * time + ph).sin();
                }
                *v += add;
            }
        }

        subjects.push(SubjectRecord {
            subject_id: format!("synth-{i:04}"),
            label: Some(label),
            icn: IcnMatrix::new(mat, cfg.fs)?,
            fnc: None,
        });
    }
    Dataset::new(subjects, cfg.fs)
}
