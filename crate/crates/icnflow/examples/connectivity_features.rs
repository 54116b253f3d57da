//! Pairwise Pearson connectivity vectors and min-max normalization.
//!
//! ```bash
//! cargo run --release --example connectivity_features
//! ```

use icnflow::dataio::{generate_synthetic, SynthConfig};
use icnflow::fnc::{compute_fnc, index_pair, minmax_apply, minmax_fit, pair_index, FeatureTable};
use icnflow::Mat;

fn main() {
    let cfg = SynthConfig {
        n_subjects: 20,
        snr_db: 6.0,
        seed: 5,
        ..SynthConfig::default()
    };
    let ds = generate_synthetic(&cfg).unwrap();

    let v = compute_fnc(&ds.subjects()[0].icn).unwrap();
    println!(
        "connectivity vector: {} entries (lower triangle of a {}x{} matrix)",
        v.values().len(),
        icnflow::CHANNELS,
        icnflow::CHANNELS
    );

    // the flattening order is row-major over pairs (i, j) with i > j
    let idx = pair_index(12, 10);
    println!(
        "pair (12, 10) lives at index {idx}; index_pair({idx}) = {:?}",
        index_pair(idx)
    );
    println!(
        "r(12, 10) for an SZ subject (both channels coupled): {:.3}",
        v.values()[idx]
    );

    // build the cohort feature table and normalize it to [0, 1]
    let mut table = Mat::zeros(ds.len(), icnflow::FNC_LEN);
    for (i, s) in ds.subjects().iter().enumerate() {
        table
            .row_mut(i)
            .copy_from_slice(compute_fnc(&s.icn).unwrap().values());
    }
    let table = FeatureTable::new(table);
    let bounds = minmax_fit(&table);
    let normalized = minmax_apply(&bounds, &table).unwrap();
    let (lo, hi) = normalized
        .x
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    println!("normalized table range: [{lo}, {hi}]");
}
