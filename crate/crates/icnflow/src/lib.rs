//! Signal-level feature pipelines and classifiers for two-group cohort studies
//! built on multichannel resting-state time courses.
//!
//! The library covers the full path from raw per-subject channel matrices to a
//! scored report:
//!
//! * [`dataio`] — cohort ingestion from a manifest of per-subject CSV files,
//!   zero-padding to a common length, seeded synthetic cohorts, and model
//!   persistence.
//! * [`dsp`] — Butterworth bandpass design as second-order sections and
//!   zero-phase (forward-backward) application, forming a three-band filter
//!   bank.
//! * [`timefreq`] — Tukey-windowed power spectrograms, Morlet scalograms, and
//!   per-subject 3D stacking across channels.
//! * [`fnc`] — pairwise Pearson connectivity vectors, min-max normalization,
//!   chi-square scoring and top-k feature selection.
//! * [`classical`] — seven from-scratch classifiers (LR, SVM, LDA, GNB, KNN,
//!   DT, RF) with grid search over stratified cross-validation.
//! * [`neural`] — small 1D and 3D convolutional networks with manual
//!   backpropagation, Adam, and early stopping.
//! * [`eval`] — rank-based AUC, stratified splits and stratified k-fold plans.
//! * [`pipeline`] — end-to-end experiments pairing a feature set with a model,
//!   emitting reports, artifacts and score files.
//!
//! Every operation that consumes randomness takes an explicit 64-bit seed and
//! is bit-reproducible for a fixed seed. See the crate examples for runnable
//! walkthroughs of each stage, and the `icnflow` binary for the command-line
//! surface.

pub mod array;
pub mod classical;
pub mod cli;
pub mod dataio;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod fnc;
pub mod neural;
pub mod pipeline;
pub mod rng;
pub mod timefreq;

pub use array::{Mat, Tensor3};
pub use error::{Error, Result};

/// Number of channels every subject matrix carries.
pub const CHANNELS: usize = 105;

/// Length of the flattened lower-triangle connectivity vector for
/// [`CHANNELS`] channels.
pub const FNC_LEN: usize = CHANNELS * (CHANNELS - 1) / 2;
