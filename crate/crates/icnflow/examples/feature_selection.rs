//! Chi-square scoring and top-k selection on a planted feature table.
//!
//! ```bash
//! cargo run --release --example feature_selection
//! ```

use icnflow::fnc::{chi2_scores, select_top_k, FeatureTable};
use icnflow::rng::chacha;
use icnflow::Mat;
use rand::RngExt;

fn main() {
    // the worked 4x2 contingency example: scores are exactly [1/3, 2]
    let x = Mat::from_vec(4, 2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    let y = vec![false, false, true, true];
    let scores = chi2_scores(&FeatureTable::new(x), &y).unwrap();
    println!("worked example scores: [{}, {}]", scores[0], scores[1]);

    // plant one discriminative feature among 5460 noise columns
    let mut rng = chacha(7);
    let (n, d, planted) = (60usize, icnflow::FNC_LEN, 2024usize);
    let labels: Vec<bool> = (0..n).map(|i| i < n / 2).collect();
    let mut data = vec![0.0; n * d];
    for (r, &l) in labels.iter().enumerate() {
        for c in 0..d {
            data[r * d + c] = if c == planted {
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
    let table = FeatureTable::new(Mat::from_vec(n, d, data));
    let scores = chi2_scores(&table, &labels).unwrap();
    let selection = select_top_k(&scores, 20).unwrap();
    println!(
        "planted feature {planted} selected in the top 20: {}",
        selection.selected.contains(&planted)
    );
    println!(
        "top 5 features by score: {:?}",
        &selection.selected[..5.min(selection.selected.len())]
    );
}
