//! Fit all seven classical models on one dataset and compare training AUC.
//!
//! ```bash
//! cargo run --release --example classical_models
//! ```

use icnflow::classical::{fit, predict_scores, ClassifierSpec};
use icnflow::eval::auc_of;
use icnflow::rng::{chacha, normal};
use icnflow::Mat;

fn main() {
    // two overlapping Gaussian blobs in 6 dimensions
    let mut rng = chacha(13);
    let n = 240;
    let d = 6;
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let pos = i % 2 == 0;
        labels.push(pos);
        for j in 0..d {
            let shift = if j < 2 {
                if pos { 0.9 } else { -0.9 }
            } else {
                0.0
            };
            data.push(shift + normal(&mut rng));
        }
    }
    let x = Mat::from_vec(n, d, data);

    let specs = [
        ClassifierSpec::Lr { l2: 0.1 },
        ClassifierSpec::Svm { c: 1.0 },
        ClassifierSpec::Lda { ridge: 1e-3 },
        ClassifierSpec::Gnb { var_floor: 1e-9 },
        ClassifierSpec::Knn { k: 7 },
        ClassifierSpec::Dt { max_depth: Some(4) },
        ClassifierSpec::rf(100, Some(6)),
    ];
    println!("training AUC on 240 points with two informative dimensions:");
    for spec in specs {
        let model = fit(&spec, &x, &labels, 99).unwrap();
        let scores = predict_scores(&model, &x).unwrap();
        println!("  {:24} {:.4}", spec.describe(), auc_of(&scores, &labels).unwrap());
    }
}
