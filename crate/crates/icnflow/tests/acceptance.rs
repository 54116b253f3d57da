//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measured evidence. Run with
//! `cargo test --test acceptance -- --nocapture` to see every line.

use std::f64::consts::PI;
use std::time::Instant;

use icnflow::classical::{Algorithm, ClassifierSpec};
use icnflow::dataio::{generate_synthetic, SynthConfig};
use icnflow::dsp::{design_butterworth_bandpass, BandSpec};
use icnflow::eval::{auc_of, stratified_split};
use icnflow::fnc::{chi2_scores, compute_fnc, pearson, select_top_k, FeatureTable};
use icnflow::neural::{
    batch_loss, batch_loss_and_grad, train, Conv1dSpec, Conv3dSpec, Net1dConfig, Net3dConfig,
    Network1d, Network3d, NeuralNet, StopReason, TrainConfig,
};
use icnflow::pipeline::{
    run_experiment, DataSource, ExperimentConfig, FeatureSet, ModelChoice,
};
use icnflow::rng::{chacha, derive_seed, normal};
use icnflow::timefreq::{
    cwt_scalogram, stack_subject_tensor, stft_power_spectrogram, CwtConfig, StftConfig, TensorKind,
};
use icnflow::{Mat, Tensor3, CHANNELS, FNC_LEN};
use rand::RngExt;

fn pass(criterion: u32, detail: &str) {
    println!("criterion {criterion}: PASS - {detail}");
}

#[test]
fn criterion_01_filter_magnitudes() {
    let started = Instant::now();
    let filt = design_butterworth_bandpass(BandSpec::new(0.3, 0.7), 2.0).unwrap();
    let target = std::f64::consts::FRAC_1_SQRT_2;
    let lo = filt.magnitude_at(0.3);
    let hi = filt.magnitude_at(0.7);
    assert!((lo - target).abs() <= 0.02 * target, "|H(0.3)| = {lo}");
    assert!((hi - target).abs() <= 0.02 * target, "|H(0.7)| = {hi}");
    let stop_low = filt.magnitude_at(0.05);
    let stop_high = filt.magnitude_at(0.9);
    assert!(stop_low < 0.01, "|H(0.05)| = {stop_low}");
    assert!(stop_high < 0.01, "|H(0.9)| = {stop_high}");
    pass(
        1,
        &format!(
            "band edges at {lo:.6}/{hi:.6} (1/sqrt2 = {target:.6}), stopband {stop_low:.2e} and {stop_high:.2e}, {:?}",
            started.elapsed()
        ),
    );
}

fn synthetic_subject(seed: u64) -> icnflow::dataio::IcnMatrix {
    let ds = generate_synthetic(&SynthConfig {
        n_subjects: 2,
        seed,
        ..SynthConfig::default()
    })
    .unwrap();
    ds.subjects()[0].icn.clone()
}

#[test]
fn criterion_02_tensor_shapes() {
    let icn = synthetic_subject(1);
    assert_eq!(icn.len(), 234);
    let started = Instant::now();
    let spec = stack_subject_tensor(
        &icn,
        TensorKind::Spectrogram,
        &StftConfig::default(),
        &CwtConfig::default(),
    )
    .unwrap();
    let scal = stack_subject_tensor(
        &icn,
        TensorKind::Scalogram,
        &StftConfig::default(),
        &CwtConfig::default(),
    )
    .unwrap();
    let elapsed = started.elapsed();
    assert_eq!(spec.data.shape(), (12, 11, 105));
    assert_eq!(scal.data.shape(), (49, 234, 105));
    assert!(
        elapsed.as_secs_f64() < 4.0,
        "per-subject stacking took {elapsed:?}"
    );
    pass(
        2,
        &format!("tensors 12x11x105 and 49x234x105, both stacks in {elapsed:?}"),
    );
}

#[test]
fn criterion_03_transform_oracles() {
    // Parseval with a rectangular window at hop = window
    let mut rng = chacha(3);
    let cfg = StftConfig {
        window_len: 22,
        tukey_alpha: 0.0,
        hop: 22,
    };
    let mut worst_parseval = 0.0f64;
    for _ in 0..20 {
        let f = 0.05 + 0.9 * rng.random::<f64>();
        let signal: Vec<f64> = (0..220)
            .map(|t| (2.0 * PI * f * t as f64 / 2.0).sin() + 0.5 * normal(&mut rng))
            .collect();
        let m = stft_power_spectrogram(&signal, &cfg).unwrap();
        let mut spectral = 0.0;
        for n in 0..m.cols() {
            for bin in 0..m.rows() {
                let w = if bin == 0 || bin == m.rows() - 1 { 1.0 } else { 2.0 };
                spectral += w * m.get(bin, n);
            }
        }
        let energy: f64 = signal[..m.cols() * 22].iter().map(|v| v * v).sum();
        worst_parseval = worst_parseval.max((spectral - energy).abs() / energy);
    }
    assert!(worst_parseval < 1e-6, "Parseval error {worst_parseval}");

    // scalogram peak scale vs the scale-frequency relation
    let cwt_cfg = CwtConfig::default();
    let fs = 2.0;
    let mut worst_gap = 0usize;
    for _ in 0..20 {
        let f = 0.05 + 0.70 * rng.random::<f64>();
        let signal: Vec<f64> = (0..234)
            .map(|t| (2.0 * PI * f * t as f64 / fs).sin())
            .collect();
        let scal = cwt_scalogram(&signal, &cwt_cfg, fs).unwrap();
        let (lo, hi) = (scal.cols() / 4, scal.cols() - scal.cols() / 4);
        let peak = (0..scal.rows())
            .max_by(|&a, &b| {
                let ma: f64 = scal.row(a)[lo..hi].iter().sum();
                let mb: f64 = scal.row(b)[lo..hi].iter().sum();
                ma.partial_cmp(&mb).unwrap()
            })
            .unwrap()
            + 1;
        let expect = cwt_cfg.scale_for_frequency(f, fs).round() as usize;
        let gap = peak.abs_diff(expect);
        worst_gap = worst_gap.max(gap);
        assert!(gap <= 1, "f = {f}: peak scale {peak}, relation gives {expect}");
    }
    pass(
        3,
        &format!(
            "Parseval within {worst_parseval:.2e} over 20 signals; scalogram peak within {worst_gap} scale(s) of the relation over 20 tones"
        ),
    );
}

#[test]
fn criterion_04_connectivity_oracle() {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = chacha(derive_seed(40, seed));
        let rows: Vec<Vec<f64>> = (0..CHANNELS)
            .map(|_| (0..234).map(|_| normal(&mut rng)).collect())
            .collect();
        let icn =
            icnflow::dataio::IcnMatrix::new(Mat::from_rows(&rows), 2.0).unwrap();
        let v = compute_fnc(&icn).unwrap();
        assert_eq!(v.values().len(), FNC_LEN);
        let mut k = 0;
        for i in 1..CHANNELS {
            for j in 0..i {
                let oracle = pearson(icn.channel(i), icn.channel(j)).unwrap();
                worst = worst.max((v.values()[k] - oracle).abs());
                k += 1;
            }
        }
    }
    assert!(worst < 1e-12, "max |difference| = {worst}");
    pass(
        4,
        &format!("20 subjects, all {FNC_LEN} pairs within {worst:.2e} of the pairwise oracle"),
    );
}

#[test]
fn criterion_05_chi_square_and_selection() {
    // the worked 4x2 contingency case is exact
    let t = FeatureTable::new(Mat::from_vec(
        4,
        2,
        vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0],
    ));
    let scores = chi2_scores(&t, &[false, false, true, true]).unwrap();
    assert!((scores[0] - 1.0 / 3.0).abs() < 1e-12, "{scores:?}");
    assert!((scores[1] - 2.0).abs() < 1e-12, "{scores:?}");

    // a planted discriminative connectivity feature survives selection
    let planted = 2024usize;
    let mut hits = 0;
    for run in 0..100u64 {
        let mut rng = chacha(derive_seed(50, run));
        let n = 60;
        let labels: Vec<bool> = (0..n).map(|i| i < n / 2).collect();
        let mut data = vec![0.0; n * FNC_LEN];
        for (r, &l) in labels.iter().enumerate() {
            for c in 0..FNC_LEN {
                data[r * FNC_LEN + c] = if c == planted {
                    if l {
                        0.55 + 0.45 * rng.random::<f64>()
                    } else {
                        0.45 * rng.random::<f64>()
                    }
                } else {
                    rng.random::<f64>()
                };
            }
        }
        let table = FeatureTable::new(Mat::from_vec(n, FNC_LEN, data));
        let scores = chi2_scores(&table, &labels).unwrap();
        let sel = select_top_k(&scores, 20).unwrap();
        if sel.selected.contains(&planted) {
            hits += 1;
        }
    }
    assert!(hits >= 95, "planted feature selected in only {hits}/100 runs");
    pass(
        5,
        &format!("worked contingency case exact; planted feature in the top 20 in {hits}/100 seeded runs"),
    );
}

/// O(n^2) pair-counting AUC oracle.
fn auc_pairs(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut ties, mut n1, mut n0) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (i, &li) in labels.iter().enumerate() {
        if li {
            n1 += 1.0;
        } else {
            n0 += 1.0;
        }
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                ties += 1.0;
            }
        }
    }
    (wins + 0.5 * ties) / (n1 * n0)
}

#[test]
fn criterion_06_auc_oracle() {
    let mut rng = chacha(6);
    let mut checked = 0;
    while checked < 1000 {
        let n = rng.random_range(2..=50usize);
        let scores: Vec<f64> = (0..n)
            .map(|_| (rng.random_range(0..12) as f64) / 6.0)
            .collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        if !labels.contains(&true) || !labels.contains(&false) {
            continue;
        }
        let fast = auc_of(&scores, &labels).unwrap();
        let slow = auc_pairs(&scores, &labels);
        assert!(fast == slow, "rank {fast} != pairs {slow}");
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let comp = auc_of(&scores, &flipped).unwrap();
        assert!(fast + comp == 1.0, "complement {fast} + {comp} != 1");
        checked += 1;
    }
    pass(6, "rank AUC equals pair counting and satisfies the complement law exactly on 1000 instances");
}

/// Central finite-difference check over every parameter.
fn fd_max_rel_error<N: NeuralNet>(net: &N, inputs: &[N::Input], labels: &[f64]) -> f64 {
    let idx: Vec<usize> = (0..inputs.len()).collect();
    let (_, analytic) = batch_loss_and_grad(net, inputs, labels, &idx);
    let base = net.params();
    let step = 1e-5;
    let mut worst = 0.0f64;
    for p in 0..base.len() {
        let mut probe = net.clone();
        let mut params = base.clone();
        params[p] = base[p] + step;
        probe.set_params(&params);
        let up = batch_loss(&probe, inputs, labels, &idx);
        params[p] = base[p] - step;
        probe.set_params(&params);
        let down = batch_loss(&probe, inputs, labels, &idx);
        let numeric = (up - down) / (2.0 * step);
        let denom = analytic[p].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic[p] - numeric).abs() / denom);
    }
    worst
}

#[test]
fn criterion_07_gradient_check() {
    let started = Instant::now();
    let cfg1d = Net1dConfig {
        in_channels: 8,
        convs: vec![
            Conv1dSpec { out_channels: 4, kernel: 3, pool_after: true },
            Conv1dSpec { out_channels: 4, kernel: 3, pool_after: false },
        ],
    };
    let cfg3d = Net3dConfig {
        convs: vec![
            Conv3dSpec { out_channels: 2, kernel: 3, pool_after: true },
            Conv3dSpec { out_channels: 3, kernel: 3, pool_after: false },
        ],
    };
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let mut rng = chacha(derive_seed(70, seed));
        let net = Network1d::new(cfg1d.clone(), seed).unwrap();
        let inputs: Vec<Mat> = (0..3)
            .map(|_| {
                let data: Vec<f64> = (0..8 * 20).map(|_| normal(&mut rng)).collect();
                Mat::from_vec(8, 20, data)
            })
            .collect();
        let labels = vec![1.0, 0.0, 1.0];
        let err = fd_max_rel_error(&net, &inputs, &labels);
        assert!(err < 1e-4, "1D seed {seed}: max rel error {err}");
        worst = worst.max(err);

        let net = Network3d::new(cfg3d.clone(), seed).unwrap();
        let inputs: Vec<Tensor3> = (0..2)
            .map(|_| {
                let mut t = Tensor3::zeros(5, 6, 4);
                for v in t.data_mut() {
                    *v = normal(&mut rng);
                }
                t
            })
            .collect();
        let labels = vec![1.0, 0.0];
        let err = fd_max_rel_error(&net, &inputs, &labels);
        assert!(err < 1e-4, "3D seed {seed}: max rel error {err}");
        worst = worst.max(err);
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 120, "gradient check took {elapsed:?}");
    pass(
        7,
        &format!("analytic vs central differences within {worst:.2e} over 10 seeds (1D and 3D), {elapsed:?}"),
    );
}

#[test]
fn criterion_08_training_protocol() {
    // training rows encode their label, validation rows the opposite, so the
    // validation loss rises from the first epoch on
    let cfg = TrainConfig {
        epochs: 100,
        patience: 20,
        batch_size: 4,
        seed: 5,
        ..TrainConfig::default()
    };
    let n = 20;
    let labels: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let (_, val_idx) = stratified_split(&labels, cfg.val_fraction, cfg.seed).unwrap();
    let encode = |v: f64| Mat::from_vec(2, 4, vec![v, v, v, v, -v, -v, -v, -v]);
    let inputs: Vec<Mat> = (0..n)
        .map(|i| {
            let truthful = if val_idx.contains(&i) { -1.0 } else { 1.0 };
            encode(if labels[i] { truthful } else { -truthful })
        })
        .collect();
    let linear = |seed| {
        Network1d::new(
            Net1dConfig {
                in_channels: 2,
                convs: vec![],
            },
            seed,
        )
        .unwrap()
    };

    let (restored, history) = train(linear(cfg.seed), &inputs, &labels, &cfg).unwrap();
    assert_eq!(history.best_epoch, 0, "best epoch should be the first");
    assert_eq!(history.epochs.len(), 21, "stops after patience more epochs");
    assert_eq!(history.stop, StopReason::EarlyStop);
    assert!(history.epochs.len() - history.best_epoch <= cfg.patience + 1);
    assert!(history.epochs.len() <= 100);

    // bit-exact restoration: a fresh run capped at one epoch lands on the
    // same weights
    let one = TrainConfig {
        epochs: 1,
        patience: 1,
        ..cfg.clone()
    };
    let (one_epoch, _) = train(linear(cfg.seed), &inputs, &labels, &one).unwrap();
    let a = restored.params();
    let b = one_epoch.params();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.to_bits(), y.to_bits(), "restored weights differ");
    }

    // a learnable run never exceeds the epoch budget
    let healthy: Vec<Mat> = labels
        .iter()
        .map(|&l| encode(if l { 1.0 } else { -1.0 }))
        .collect();
    let capped = TrainConfig {
        epochs: 12,
        patience: 12,
        ..cfg
    };
    let (_, h2) = train(linear(capped.seed), &healthy, &labels, &capped).unwrap();
    assert_eq!(h2.stop, StopReason::MaxEpochs);
    assert_eq!(h2.epochs.len(), 12);
    pass(
        8,
        "forced schedule stopped at epoch 21 with epoch-1 weights restored bit-exactly; max-epoch cap respected",
    );
}

fn floor_config(seed: u64, feature_set: FeatureSet, model: ModelChoice) -> ExperimentConfig {
    ExperimentConfig {
        data: DataSource::Synthetic(SynthConfig {
            n_subjects: 160,
            snr_db: 6.0,
            seed,
            ..SynthConfig::default()
        }),
        feature_set,
        model,
        seed,
        ..ExperimentConfig::default()
    }
}

#[test]
fn criterion_09_end_to_end_floors() {
    let mut details = Vec::new();
    for seed in [11u64, 12, 13] {
        let cfg = floor_config(seed, FeatureSet::RawIcn, ModelChoice::Cnn1d);
        let auc = run_experiment(&cfg).unwrap().holdout_auc;
        assert!(auc >= 0.85, "raw_icn + cnn1d seed {seed}: AUC {auc} < 0.85");
        details.push(format!("cnn1d@{seed}={auc:.3}"));

        let cfg = floor_config(seed, FeatureSet::FncAll, ModelChoice::Classical(Algorithm::Lda));
        let auc = run_experiment(&cfg).unwrap().holdout_auc;
        assert!(auc >= 0.80, "fnc_all + lda seed {seed}: AUC {auc} < 0.80");
        details.push(format!("fnc_all@{seed}={auc:.3}"));

        let cfg = floor_config(
            seed,
            FeatureSet::FncTop20,
            ModelChoice::Classical(Algorithm::Lda),
        );
        let auc = run_experiment(&cfg).unwrap().holdout_auc;
        assert!(auc >= 0.75, "fnc_top20 + lda seed {seed}: AUC {auc} < 0.75");
        details.push(format!("fnc_top20@{seed}={auc:.3}"));
    }
    pass(9, &format!("holdout floors met on all seeds: {}", details.join(" ")));
}

#[test]
fn criterion_10_band_ordering() {
    // both classes plant their structure at 0.5 Hz on disjoint channel sets,
    // so only the mid band carries the discriminative content
    let mut means = [0.0f64; 3];
    for seed in 1u64..=5 {
        for (i, set) in [FeatureSet::IcnLow, FeatureSet::IcnMid, FeatureSet::IcnHigh]
            .into_iter()
            .enumerate()
        {
            let cfg = ExperimentConfig {
                data: DataSource::Synthetic(SynthConfig {
                    n_subjects: 100,
                    snr_db: 0.0,
                    seed,
                    sz_tone_hz: 0.5,
                    bp_tone_hz: 0.5,
                    ..SynthConfig::default()
                }),
                feature_set: set,
                model: ModelChoice::Cnn1d,
                train: TrainConfig {
                    epochs: 40,
                    patience: 15,
                    ..TrainConfig::default()
                },
                seed,
                ..ExperimentConfig::default()
            };
            means[i] += run_experiment(&cfg).unwrap().holdout_auc / 5.0;
        }
    }
    let [low, mid, high] = means;
    assert!(mid > low, "mid {mid} must beat low {low}");
    assert!(mid > high, "mid {mid} must beat high {high}");
    pass(
        10,
        &format!("mean holdout AUC over 5 seeds: mid {mid:.3} > low {low:.3} and > high {high:.3}"),
    );
}

#[test]
fn criterion_11_determinism() {
    let classical = ExperimentConfig {
        data: DataSource::Synthetic(SynthConfig {
            n_subjects: 40,
            length: 120,
            seed: 21,
            ..SynthConfig::default()
        }),
        feature_set: FeatureSet::FncAll,
        model: ModelChoice::Classical(Algorithm::Lda),
        grid: Some(vec![ClassifierSpec::Lda { ridge: 1e-3 }]),
        seed: 21,
        ..ExperimentConfig::default()
    };
    let a = run_experiment(&classical).unwrap();
    let b = run_experiment(&classical).unwrap();
    assert_eq!(a.holdout_auc.to_bits(), b.holdout_auc.to_bits());
    assert_eq!(a.holdout_scores, b.holdout_scores);

    let neural = ExperimentConfig {
        data: DataSource::Synthetic(SynthConfig {
            n_subjects: 32,
            length: 96,
            seed: 22,
            ..SynthConfig::default()
        }),
        feature_set: FeatureSet::RawIcn,
        model: ModelChoice::Cnn1d,
        train: TrainConfig {
            epochs: 8,
            patience: 8,
            ..TrainConfig::default()
        },
        net1d: Net1dConfig {
            in_channels: CHANNELS,
            convs: vec![Conv1dSpec { out_channels: 6, kernel: 5, pool_after: true }],
        },
        seed: 22,
        ..ExperimentConfig::default()
    };
    let a = run_experiment(&neural).unwrap();
    let b = run_experiment(&neural).unwrap();
    assert_eq!(a.holdout_auc.to_bits(), b.holdout_auc.to_bits());
    assert_eq!(a.holdout_scores, b.holdout_scores);
    for (ra, rb) in a.report.rows.iter().zip(&b.report.rows) {
        assert_eq!(ra.auc.to_bits(), rb.auc.to_bits());
        assert_eq!(ra.fingerprint, rb.fingerprint);
        assert_eq!(ra.n, rb.n);
    }
    pass(
        11,
        "classical and neural experiments reproduce report AUCs bit-identically on rerun",
    );
}
