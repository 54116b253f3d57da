//! Hyperparameter grid search with stratified 5-fold cross-validation.
//!
//! ```bash
//! cargo run --release --example grid_search
//! ```

use icnflow::classical::{default_grid, grid_search_cv, Algorithm};
use icnflow::eval::stratified_kfold;
use icnflow::rng::{chacha, normal};
use icnflow::Mat;

fn main() {
    let mut rng = chacha(21);
    let n = 120;
    let d = 8;
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let pos = i % 2 == 0;
        labels.push(pos);
        for j in 0..d {
            let shift = if j == 0 {
                if pos { 1.2 } else { -1.2 }
            } else {
                0.0
            };
            data.push(shift + normal(&mut rng));
        }
    }
    let x = Mat::from_vec(n, d, data);

    let plan = stratified_kfold(&labels, 5, 7).unwrap();
    println!("fold sizes: {:?}", plan.fold_sizes());

    for algorithm in [Algorithm::Knn, Algorithm::Lda, Algorithm::Dt] {
        let grid = default_grid(algorithm);
        let outcome = grid_search_cv(&grid, &x, &labels, 5, 7).unwrap();
        println!("\n{algorithm} grid ({} points):", grid.len());
        for (spec, mean) in &outcome.mean_auc {
            let marker = if *spec == outcome.best_spec { " <- best" } else { "" };
            println!("  {:24} mean CV AUC {:.4}{marker}", spec.describe(), mean);
        }
    }
}
