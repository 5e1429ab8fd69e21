//! Reward functions for the one-step labeling episode.
//!
//! An instance's reward mixes the critic's per-class agreement with the
//! policy's decisions (local reward, bounded in `[-1, 1]`) and a score of the
//! decisions against the originally observed positives (global reward).

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{MlpacError, Result};
use crate::rng::{substream, tag};

/// Per-class decisions; `true` means the class is set to TRUE (`+1`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ActionVector(Vec<bool>);

impl ActionVector {
    /// Build from `±1` values.
    pub fn from_signs(signs: Vec<i8>) -> Result<Self> {
        signs
            .iter()
            .map(|&s| match s {
                1 => Ok(true),
                -1 => Ok(false),
                other => Err(MlpacError::Input(format!(
                    "action must be +1 or -1, got {other}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(ActionVector)
    }

    pub fn from_bools(values: Vec<bool>) -> Self {
        ActionVector(values)
    }

    pub fn all(len: usize, positive: bool) -> Self {
        ActionVector(vec![positive; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_positive(&self, c: usize) -> bool {
        self.0[c]
    }

    pub fn sign(&self, c: usize) -> i8 {
        if self.0[c] {
            1
        } else {
            -1
        }
    }

    pub fn signs(&self) -> Vec<i8> {
        (0..self.len()).map(|c| self.sign(c)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn as_bools(&self) -> &[bool] {
        &self.0
    }

    pub fn positive_count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Every vector in `{+1, -1}^len`, in binary counting order.
    pub fn enumerate_all(len: usize) -> impl Iterator<Item = ActionVector> {
        assert!(len < 32, "enumeration is for small class counts");
        (0u32..(1 << len))
            .map(move |bits| ActionVector((0..len).map(|c| bits >> c & 1 == 1).collect()))
    }
}

/// Decay of the global-reward weight over training epochs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightDecay {
    /// From `w0` at the first epoch down to `0.1 · w0` at the last.
    #[default]
    Linear,
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSpec {
    pub w0: f64,
    pub decay: WeightDecay,
    /// Fraction of unknown classes sampled into the local-reward set.
    pub rho: f64,
    pub seed: u64,
}

impl RewardSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.w0.is_finite() || self.w0 < 0.0 {
            return Err(MlpacError::Config(format!(
                "w0 must be finite and >= 0, got {}",
                self.w0
            )));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(MlpacError::Config(format!(
                "rho must be in (0, 1], got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec {
            w0: 10.0,
            decay: WeightDecay::Linear,
            rho: 0.4,
            seed: 0,
        }
    }
}

/// Which score of the sampled decisions serves as the global reward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GlobalRewardKind {
    #[default]
    Recall,
    Precision,
    F1,
    None,
}

/// Denominator used when averaging local rewards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LocalNorm {
    /// Divide by the size of the sampled class set.
    #[default]
    Sampled,
    /// Divide by the total number of classes.
    AllClasses,
}

/// Clamped log-odds of the critic agreeing with `action`.
pub fn local_reward(p: f64, positive: bool) -> f64 {
    let p = crate::clamp_prob(p);
    let log_odds = (p / (1.0 - p)).ln();
    let signed = if positive { log_odds } else { -log_odds };
    signed.clamp(-1.0, 1.0)
}

/// Classes whose local rewards enter the total reward: all observed
/// positives plus `ceil(rho · |unknown|)` unknowns drawn without replacement.
/// Returned in ascending order.
pub fn sample_reward_classes(observed: &[u8], rho: f64, seed: u64) -> Vec<usize> {
    let mut picked: Vec<usize> = Vec::with_capacity(observed.len());
    let mut unknown = Vec::new();
    for (c, &o) in observed.iter().enumerate() {
        if o == 1 {
            picked.push(c);
        } else {
            unknown.push(c);
        }
    }
    let k = ((rho * unknown.len() as f64).ceil() as usize).min(unknown.len());
    if k == unknown.len() {
        picked.extend(unknown);
    } else if k > 0 {
        let mut rng = substream(seed, &[tag::REWARD_CLASSES]);
        picked.extend(
            sample(&mut rng, unknown.len(), k)
                .into_iter()
                .map(|j| unknown[j]),
        );
    }
    picked.sort_unstable();
    picked
}

fn hits(observed: &[u8], actions: &ActionVector) -> (usize, usize, usize) {
    assert_eq!(
        observed.len(),
        actions.len(),
        "observed/action length mismatch"
    );
    let observed_pos = observed.iter().filter(|&&o| o == 1).count();
    let tp = observed
        .iter()
        .zip(actions.iter())
        .filter(|(&o, a)| o == 1 && *a)
        .count();
    (tp, observed_pos, actions.positive_count())
}

/// Fraction of observed positives the actions set to TRUE; 0 when nothing is observed.
pub fn recall_reward(observed: &[u8], actions: &ActionVector) -> f64 {
    let (tp, pos, _) = hits(observed, actions);
    if pos == 0 {
        0.0
    } else {
        tp as f64 / pos as f64
    }
}

/// Fraction of TRUE actions that hit an observed positive; 0 when nothing is predicted.
pub fn precision_reward(observed: &[u8], actions: &ActionVector) -> f64 {
    let (tp, _, predicted) = hits(observed, actions);
    if predicted == 0 {
        0.0
    } else {
        tp as f64 / predicted as f64
    }
}

pub fn f1_reward(observed: &[u8], actions: &ActionVector) -> f64 {
    let (tp, pos, predicted) = hits(observed, actions);
    if pos + predicted == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (pos + predicted) as f64
    }
}

impl GlobalRewardKind {
    pub fn score(self, observed: &[u8], actions: &ActionVector) -> f64 {
        match self {
            GlobalRewardKind::Recall => recall_reward(observed, actions),
            GlobalRewardKind::Precision => precision_reward(observed, actions),
            GlobalRewardKind::F1 => f1_reward(observed, actions),
            GlobalRewardKind::None => 0.0,
        }
    }
}

/// `(1/|S|) Σ_{c∈S} r_c + w · global`.
pub fn total_reward(local_rs: &[f64], global: f64, w: f64) -> Result<f64> {
    if local_rs.is_empty() {
        return Err(MlpacError::Input("local reward set is empty".into()));
    }
    let mean = local_rs.iter().sum::<f64>() / local_rs.len() as f64;
    Ok(mean + w * global)
}

/// Same as [`total_reward`] but with an explicit normaliser for the local sum.
pub fn total_reward_normalized(local_rs: &[f64], norm: f64, global: f64, w: f64) -> Result<f64> {
    if local_rs.is_empty() || norm <= 0.0 {
        return Err(MlpacError::Input("local reward set is empty".into()));
    }
    Ok(local_rs.iter().sum::<f64>() / norm + w * global)
}
