//! AUC, stratified splits and fold plans.
//!
//! ```bash
//! cargo run --release --example evaluation_metrics
//! ```

use icnflow::eval::{auc_of, stratified_kfold, stratified_split};

fn main() {
    // perfect ranking, a 3-of-4-pairs ranking, and an all-ties ranking
    let y = vec![true, true, false, false];
    println!(
        "perfect separation: {}",
        auc_of(&[0.9, 0.8, 0.3, 0.2], &y).unwrap()
    );
    println!(
        "3 of 4 pairs correct: {}",
        auc_of(&[0.9, 0.2, 0.8, 0.3], &[true, false, false, true]).unwrap()
    );
    println!(
        "constant scores: {}",
        auc_of(&[0.5, 0.5, 0.5, 0.5], &y).unwrap()
    );

    // complement law: flipping the labels mirrors the AUC exactly
    let scores = [0.1, 0.7, 0.4, 0.9, 0.3];
    let labels = [false, true, false, true, true];
    let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
    let a = auc_of(&scores, &labels).unwrap();
    let b = auc_of(&scores, &flipped).unwrap();
    println!("complement law: {a} + {b} = {}", a + b);

    // a 471-subject cohort split at 20%: holdout proportions stay per-class
    let labels: Vec<bool> = (0..471).map(|i| i < 236).collect();
    let (train, holdout) = stratified_split(&labels, 0.2, 1).unwrap();
    let pos = holdout.iter().filter(|&&i| labels[i]).count();
    println!(
        "471 subjects at fraction 0.2: train {}, holdout {} ({} positive / {} negative)",
        train.len(),
        holdout.len(),
        pos,
        holdout.len() - pos
    );

    // 11 subjects over 5 folds: sizes {3,2,2,2,2}
    let labels: Vec<bool> = (0..11).map(|i| i < 6).collect();
    let plan = stratified_kfold(&labels, 5, 2).unwrap();
    println!("11 subjects over 5 folds: sizes {:?}", plan.fold_sizes());
}
