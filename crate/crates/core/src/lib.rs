//! Multi-label positive-unlabeled learning with a policy-gradient classifier.
//!
//! A policy network is trained with REINFORCE against a reward that mixes
//! per-class confidence of a supervised critic (local reward) with the recall
//! of observed positives (global reward). The critic is trained on labels
//! enhanced with confident pseudo-positives and frozen after a fixed number of
//! epochs.
//!
//! Module map:
//! - [`netcore`]: dense sigmoid-output networks with analytic gradients.
//! - [`datagen`]: synthetic multi-label data, positive masking, dataset files.
//! - [`rewards`]: local, global and total rewards.
//! - [`learners`]: action sampling, REINFORCE gradient, critic updates.
//! - [`trainer`]: the end-to-end training loop, baselines and ablations.
//! - [`evalkit`]: precision/recall/F1 and (mean) average precision.
//! - [`cli`]: the `mlpac` command line.

pub mod cli;
pub mod datagen;
pub mod error;
pub mod evalkit;
pub mod learners;
pub mod netcore;
pub mod rewards;
pub mod rng;
pub mod trainer;

pub use error::{MlpacError, Result};

/// Lower/upper clamp applied to every probability before taking a log.
pub const PROB_CLAMP: f64 = 1e-7;

/// Clamp a probability into `[PROB_CLAMP, 1 - PROB_CLAMP]`.
#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}
