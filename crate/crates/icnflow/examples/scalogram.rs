//! Morlet scalograms: scale-frequency correspondence and the tensor stack.
//!
//! ```bash
//! cargo run --release --example scalogram
//! ```

use icnflow::dataio::{generate_synthetic, SynthConfig};
use icnflow::timefreq::{cwt_scalogram, stack_subject_tensor, CwtConfig, TensorKind};
use std::f64::consts::PI;

fn main() {
    let fs = 2.0;
    let cfg = CwtConfig::default();

    // a pure tone peaks at the scale matching its frequency
    for freq in [0.1, 0.25, 0.5] {
        let signal: Vec<f64> = (0..234)
            .map(|t| (2.0 * PI * freq * t as f64 / fs).sin())
            .collect();
        let scal = cwt_scalogram(&signal, &cfg, fs).unwrap();
        let (lo, hi) = (scal.cols() / 4, scal.cols() - scal.cols() / 4);
        let peak_row = (0..scal.rows())
            .max_by(|&a, &b| {
                let ma: f64 = scal.row(a)[lo..hi].iter().sum();
                let mb: f64 = scal.row(b)[lo..hi].iter().sum();
                ma.partial_cmp(&mb).unwrap()
            })
            .unwrap();
        println!(
            "{freq} Hz tone: peak at scale {} (scale-frequency relation predicts {:.1})",
            peak_row + 1,
            cfg.scale_for_frequency(freq, fs)
        );
    }

    let ds = generate_synthetic(&SynthConfig {
        n_subjects: 1,
        class_balance: 0.5,
        seed: 9,
        ..SynthConfig::default()
    });
    // n_subjects: 1 is rejected; cohorts need both classes
    println!("single-subject cohort rejected: {}", ds.is_err());

    let ds = generate_synthetic(&SynthConfig {
        n_subjects: 2,
        seed: 9,
        ..SynthConfig::default()
    })
    .unwrap();
    let tensor = stack_subject_tensor(
        &ds.subjects()[0].icn,
        TensorKind::Scalogram,
        &Default::default(),
        &cfg,
    )
    .unwrap();
    println!("subject scalogram tensor shape: {:?}", tensor.data.shape());
}
