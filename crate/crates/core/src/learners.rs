//! Policy side (action sampling, log-probabilities, the REINFORCE batch
//! gradient) and critic side (weighted supervised steps treating unknown
//! labels as negatives), plus the 0.5-threshold prediction rule both share.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MlpacError, Result};
use crate::netcore::{sigmoid, DenseModel, Direction, Gradients};
use crate::rewards::ActionVector;
use crate::rng::{substream, tag};

/// `T` sampled decision vectors for one instance and their rewards.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledRollout {
    /// Row of the instance within the batch.
    pub instance: usize,
    pub actions: Vec<ActionVector>,
    pub rewards: Vec<f64>,
    pub log_probs: Vec<f64>,
}

impl SampledRollout {
    pub fn validate(&self) -> Result<()> {
        let t = self.actions.len();
        if t == 0 || self.rewards.len() != t || self.log_probs.len() != t {
            return Err(MlpacError::Input(format!(
                "rollout for instance {}: {} actions, {} rewards, {} log-probs",
                self.instance,
                t,
                self.rewards.len(),
                self.log_probs.len()
            )));
        }
        if self.rewards.iter().any(|r| !r.is_finite()) {
            return Err(MlpacError::Numeric(format!(
                "rollout for instance {} has a non-finite reward",
                self.instance
            )));
        }
        Ok(())
    }
}

/// Reward baseline subtracted before weighting log-probability gradients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    #[default]
    None,
    /// Subtract the mean reward of the instance's own `T` samples.
    InstanceMean,
}

/// Loss weighting for supervised training with unknowns read as negatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "variant")]
pub enum CriticMode {
    #[default]
    Plain,
    /// Up-weight positive cells. `None` uses the batch's unlabeled/positive
    /// cell-count ratio.
    PosWeight { value: Option<f64> },
    /// Keep every positive cell plus `keep_multiple ×` as many randomly
    /// chosen unlabeled cells; all other cells get weight 0.
    NegSample { keep_multiple: usize },
}

impl CriticMode {
    /// The negative-sampling baseline: ten unlabeled cells kept per positive.
    pub const NEG_WEIGHT_DEFAULT: CriticMode = CriticMode::NegSample { keep_multiple: 10 };

    pub fn validate(&self) -> Result<()> {
        match *self {
            CriticMode::PosWeight { value: Some(v) } if !(v > 0.0 && v.is_finite()) => Err(
                MlpacError::Config(format!("pos_weight value must be > 0, got {v}")),
            ),
            CriticMode::NegSample { keep_multiple: 0 } => Err(MlpacError::Config(
                "neg_sample keep_multiple must be > 0".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Draw `T` independent action vectors; class `c` is TRUE with probability `p[c]`.
pub fn sample_actions(p: &[f64], t: usize, seed: u64) -> Vec<ActionVector> {
    let mut rng = substream(seed, &[tag::ACTIONS]);
    (0..t)
        .map(|_| ActionVector::from_bools(p.iter().map(|&pc| rng.random::<f64>() < pc).collect()))
        .collect()
}

/// `Σ_c ln p_c` over TRUE decisions plus `ln(1 - p_c)` over FALSE ones,
/// with clamped probabilities.
pub fn action_log_prob(p: &[f64], actions: &ActionVector) -> f64 {
    assert_eq!(p.len(), actions.len(), "probability/action length mismatch");
    p.iter()
        .zip(actions.iter())
        .map(|(&pc, pos)| {
            let pc = crate::clamp_prob(pc);
            if pos {
                pc.ln()
            } else {
                (1.0 - pc).ln()
            }
        })
        .sum()
}

/// REINFORCE estimate `(1/B) Σ_i (1/T) Σ_t R_it ∇ ln π(a_it | x_i)`.
pub fn reinforce_batch_gradient(
    policy: &DenseModel,
    batch: &[Vec<f64>],
    rollouts: &[SampledRollout],
) -> Result<Gradients> {
    reinforce_batch_gradient_with(policy, batch, rollouts, Baseline::None)
}

pub fn reinforce_batch_gradient_with(
    policy: &DenseModel,
    batch: &[Vec<f64>],
    rollouts: &[SampledRollout],
    baseline: Baseline,
) -> Result<Gradients> {
    if batch.is_empty() {
        return Err(MlpacError::Input("empty batch".into()));
    }
    let inv_b = 1.0 / batch.len() as f64;
    let mut grads = Gradients::zeros_like(policy);
    for rollout in rollouts {
        rollout.validate()?;
        let x = batch.get(rollout.instance).ok_or_else(|| {
            MlpacError::Input(format!(
                "rollout refers to instance {} outside a batch of {}",
                rollout.instance,
                batch.len()
            ))
        })?;
        let t = rollout.actions.len() as f64;
        let b = match baseline {
            Baseline::None => 0.0,
            Baseline::InstanceMean => rollout.rewards.iter().sum::<f64>() / t,
        };
        // ∇_z ln π(a|x) = y - σ(z), so all T samples share one backward pass.
        let probs: Vec<f64> = policy.logits(x)?.into_iter().map(sigmoid).collect();
        let mut dlogits = vec![0.0; probs.len()];
        for (a, r) in rollout.actions.iter().zip(&rollout.rewards) {
            if a.len() != probs.len() {
                return Err(MlpacError::Input(format!(
                    "action vector of length {} for {} outputs",
                    a.len(),
                    probs.len()
                )));
            }
            let scale = (r - b) * inv_b / t;
            for (c, pos) in a.iter().enumerate() {
                dlogits[c] += scale * (if pos { 1.0 } else { 0.0 } - probs[c]);
            }
        }
        policy.accumulate_logit_grad(x, &dlogits, &mut grads)?;
    }
    Ok(grads)
}

/// TRUE exactly where the probability is strictly above 0.5.
pub fn predict_from_probs(p: &[f64]) -> ActionVector {
    ActionVector::from_bools(p.iter().map(|&pc| pc > 0.5).collect())
}

pub fn policy_predict(policy: &DenseModel, x: &[f64]) -> Result<ActionVector> {
    Ok(predict_from_probs(&policy.forward(x)?))
}

pub fn critic_predict(critic: &DenseModel, x: &[f64]) -> Result<Vec<bool>> {
    Ok(critic.forward(x)?.into_iter().map(|p| p > 0.5).collect())
}

/// Per-cell loss weights for a batch of `{0,1}` labels under `mode`.
pub fn critic_weights(labels: &[Vec<u8>], mode: CriticMode, seed: u64) -> Vec<Vec<f64>> {
    let positives: usize = labels.iter().flatten().filter(|&&l| l == 1).count();
    let cells: usize = labels.iter().map(Vec::len).sum();
    let unlabeled = cells - positives;
    let plain = || labels.iter().map(|row| vec![1.0; row.len()]).collect();
    if positives == 0 {
        return plain();
    }
    match mode {
        CriticMode::Plain => plain(),
        CriticMode::PosWeight { value } => {
            let wp = value.unwrap_or(unlabeled as f64 / positives as f64);
            labels
                .iter()
                .map(|row| row.iter().map(|&l| if l == 1 { wp } else { 1.0 }).collect())
                .collect()
        }
        CriticMode::NegSample { keep_multiple } => {
            let keep = (keep_multiple * positives).min(unlabeled);
            let mut weights: Vec<Vec<f64>> = labels
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&l| if l == 1 { 1.0 } else { 0.0 })
                        .collect()
                })
                .collect();
            let unlabeled_cells: Vec<(usize, usize)> = labels
                .iter()
                .enumerate()
                .flat_map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|(_, &l)| l == 0)
                        .map(move |(c, _)| (i, c))
                })
                .collect();
            let mut rng = substream(seed, &[tag::NEG_SAMPLE]);
            for j in sample(&mut rng, unlabeled_cells.len(), keep) {
                let (i, c) = unlabeled_cells[j];
                weights[i][c] = 1.0;
            }
            weights
        }
    }
}

/// Weighted-BCE loss and gradient of the critic on `labels` (unknown = 0 = FALSE).
pub fn critic_loss_and_grad(
    critic: &DenseModel,
    batch: &[Vec<f64>],
    labels: &[Vec<u8>],
    mode: CriticMode,
    seed: u64,
) -> Result<(f64, Gradients)> {
    mode.validate()?;
    if labels.len() != batch.len() {
        return Err(MlpacError::Input(format!(
            "{} label rows for a batch of {}",
            labels.len(),
            batch.len()
        )));
    }
    let targets: Vec<Vec<f64>> = labels
        .iter()
        .map(|row| row.iter().map(|&l| l as f64).collect())
        .collect();
    let weights = critic_weights(labels, mode, seed);
    critic.backward_weighted_bce(batch, &targets, &weights)
}

/// One descent step on the weighted BCE.
pub fn critic_step(
    critic: &DenseModel,
    batch: &[Vec<f64>],
    labels: &[Vec<u8>],
    mode: CriticMode,
    lr: f64,
    seed: u64,
) -> Result<DenseModel> {
    let (_, g) = critic_loss_and_grad(critic, batch, labels, mode, seed)?;
    critic.apply_update(&g, lr, Direction::Descend)
}
