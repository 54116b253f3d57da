//! Tukey-windowed power spectrograms and the per-subject tensor stack.
//!
//! ```bash
//! cargo run --release --example spectrogram
//! ```

use icnflow::dataio::{generate_synthetic, SynthConfig};
use icnflow::timefreq::{stack_subject_tensor, stft_power_spectrogram, tukey_window, StftConfig, TensorKind};
use std::f64::consts::PI;

fn main() {
    let cfg = StftConfig::default();
    let window = tukey_window(cfg.window_len, cfg.tukey_alpha).unwrap();
    println!(
        "tukey({}, {}): endpoints {:.1}/{:.1}, flat center w[10..=11] = {:?}",
        cfg.window_len,
        cfg.tukey_alpha,
        window[0],
        window[cfg.window_len - 1],
        &window[10..=11]
    );

    // a 0.5 Hz tone concentrates in bin round(0.5 * 22 / 2) = 6
    let fs = 2.0;
    let signal: Vec<f64> = (0..234)
        .map(|t| (2.0 * PI * 0.5 * t as f64 / fs).sin())
        .collect();
    let spec = stft_power_spectrogram(&signal, &cfg).unwrap();
    println!(
        "spectrogram of a 234-sample signal: {} bins x {} frames",
        spec.rows(),
        spec.cols()
    );
    let mut totals: Vec<(usize, f64)> = (0..spec.rows())
        .map(|f| (f, (0..spec.cols()).map(|n| spec.get(f, n)).sum()))
        .collect();
    totals.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    println!(
        "strongest bins for a 0.5 Hz tone: {:?}",
        totals[..3].iter().map(|&(f, _)| f).collect::<Vec<_>>()
    );

    // stacking all 105 channels gives the volumetric representation
    let ds = generate_synthetic(&SynthConfig {
        n_subjects: 2,
        seed: 1,
        ..SynthConfig::default()
    })
    .unwrap();
    let tensor = stack_subject_tensor(
        &ds.subjects()[0].icn,
        TensorKind::Spectrogram,
        &cfg,
        &Default::default(),
    )
    .unwrap();
    println!("subject tensor shape: {:?}", tensor.data.shape());
}
