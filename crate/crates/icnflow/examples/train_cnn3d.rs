//! Train the 3D convolutional network on stacked spectrogram tensors.
//!
//! ```bash
//! cargo run --release --example train_cnn3d
//! ```

use icnflow::dataio::{generate_synthetic, SynthConfig};
use icnflow::eval::{auc_of, stratified_split};
use icnflow::neural::{predict_batch, train, Net3dConfig, Network3d, TrainConfig};
use icnflow::timefreq::{stack_subject_tensor, CwtConfig, StftConfig, TensorKind};
use icnflow::Tensor3;

fn main() {
    let ds = generate_synthetic(&SynthConfig {
        n_subjects: 40,
        snr_db: 8.0,
        seed: 23,
        ..SynthConfig::default()
    })
    .unwrap();
    let labels = ds.labels().unwrap();

    println!("stacking spectrogram tensors for {} subjects...", ds.len());
    let inputs: Vec<Tensor3> = ds
        .subjects()
        .iter()
        .map(|s| {
            stack_subject_tensor(
                &s.icn,
                TensorKind::Spectrogram,
                &StftConfig::default(),
                &CwtConfig::default(),
            )
            .unwrap()
            .data
        })
        .collect();
    println!("tensor shape: {:?}", inputs[0].shape());

    let (train_idx, hold_idx) = stratified_split(&labels, 0.2, 23).unwrap();
    let train_in: Vec<Tensor3> = train_idx.iter().map(|&i| inputs[i].clone()).collect();
    let train_y: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();

    let cfg = TrainConfig {
        epochs: 15,
        patience: 8,
        seed: 23,
        ..TrainConfig::default()
    };
    let net = Network3d::new(Net3dConfig::default(), cfg.seed).unwrap();
    let (trained, history) = train(net, &train_in, &train_y, &cfg).unwrap();
    println!(
        "trained {} epochs (stop: {:?}), best validation AUC {:.3}",
        history.epochs.len(),
        history.stop,
        history.epochs[history.best_epoch].val_auc
    );

    let hold_in: Vec<Tensor3> = hold_idx.iter().map(|&i| inputs[i].clone()).collect();
    let hold_y: Vec<bool> = hold_idx.iter().map(|&i| labels[i]).collect();
    let scores = predict_batch(&trained, &hold_in).unwrap();
    println!("holdout AUC: {:.4}", auc_of(&scores, &hold_y).unwrap());
}
