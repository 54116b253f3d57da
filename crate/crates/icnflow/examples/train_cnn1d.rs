//! Train the 1D convolutional network on raw channel matrices.
//!
//! ```bash
//! cargo run --release --example train_cnn1d
//! ```

use icnflow::dataio::{generate_synthetic, SynthConfig};
use icnflow::eval::{auc_of, stratified_split};
use icnflow::neural::{predict_batch, train, Net1dConfig, Network1d, TrainConfig};
use icnflow::Mat;

fn main() {
    let ds = generate_synthetic(&SynthConfig {
        n_subjects: 80,
        snr_db: 6.0,
        seed: 17,
        ..SynthConfig::default()
    })
    .unwrap();
    let labels = ds.labels().unwrap();
    let inputs: Vec<Mat> = ds.subjects().iter().map(|s| s.icn.data().clone()).collect();

    let (train_idx, hold_idx) = stratified_split(&labels, 0.2, 17).unwrap();
    let train_in: Vec<Mat> = train_idx.iter().map(|&i| inputs[i].clone()).collect();
    let train_y: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();

    let net_cfg = Net1dConfig::default();
    println!(
        "architecture: {} input channels, temporal lengths {:?} after each stage",
        net_cfg.in_channels,
        net_cfg.stage_lengths(ds.max_length())
    );

    let cfg = TrainConfig {
        epochs: 25,
        patience: 10,
        seed: 17,
        ..TrainConfig::default()
    };
    let net = Network1d::new(net_cfg, cfg.seed).unwrap();
    let (trained, history) = train(net, &train_in, &train_y, &cfg).unwrap();
    println!(
        "trained {} epochs (stop: {:?}), best epoch {} with validation AUC {:.3}",
        history.epochs.len(),
        history.stop,
        history.best_epoch + 1,
        history.epochs[history.best_epoch].val_auc
    );

    let hold_in: Vec<Mat> = hold_idx.iter().map(|&i| inputs[i].clone()).collect();
    let hold_y: Vec<bool> = hold_idx.iter().map(|&i| labels[i]).collect();
    let scores = predict_batch(&trained, &hold_in).unwrap();
    println!("holdout AUC: {:.4}", auc_of(&scores, &hold_y).unwrap());
}
