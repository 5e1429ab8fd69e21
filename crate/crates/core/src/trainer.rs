//! End-to-end training: supervised pretraining, alternating critic/policy
//! updates with label enhancement, critic freezing and best-checkpoint
//! selection, plus the supervised baselines the method is compared with.

use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datagen::{FullDataset, PartialDataset};
use crate::error::{MlpacError, Result};
use crate::evalkit::{self, MetricsReport, TargetKind};
use crate::learners::{
    self, critic_loss_and_grad, predict_from_probs, sample_actions, Baseline, CriticMode,
    SampledRollout,
};
use crate::netcore::{DenseModel, Direction, Optimizer};
use crate::rewards::{
    local_reward, sample_reward_classes, GlobalRewardKind, LocalNorm, RewardSpec, WeightDecay,
};
use crate::rng::{derive, substream, tag};

// Sub-seed labels for the networks and per-phase streams of one run.
const POLICY_INIT: u64 = 101;
const CRITIC_INIT: u64 = 102;
const PRETRAIN_POLICY: u64 = 103;
const PRETRAIN_CRITIC: u64 = 104;
const RL_PHASE: u64 = 105;
const BASELINE_PHASE: u64 = 106;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMetric {
    /// F1 of thresholded predictions against observed labels, unknowns read as negative.
    #[default]
    F1VsObserved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub total_epochs: usize,
    /// Epochs during which the critic keeps training; frozen afterwards.
    pub iterative_epochs: usize,
    pub pretrain_epochs: usize,
    /// Actions sampled per instance per batch (`T`).
    pub sample_steps: usize,
    /// Policy step size.
    pub alpha: f64,
    /// Step size of every supervised update (pretraining, critic, baselines).
    pub critic_lr: f64,
    pub momentum: f64,
    /// Policy probability an enhanced label must exceed.
    pub gamma: f64,
    pub reward: RewardSpec,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub seed: u64,
    pub global_reward: GlobalRewardKind,
    pub local_reward: bool,
    pub enhancement: bool,
    pub iterate_critic: bool,
    pub local_norm: LocalNorm,
    pub baseline: Baseline,
    pub validation_metric: ValidationMetric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            total_epochs: 30,
            iterative_epochs: 10,
            pretrain_epochs: 3,
            sample_steps: 10,
            alpha: 0.5,
            critic_lr: 0.5,
            momentum: 0.0,
            gamma: 0.95,
            reward: RewardSpec::default(),
            batch_size: 32,
            hidden: vec![32],
            seed: 0,
            global_reward: GlobalRewardKind::Recall,
            local_reward: true,
            enhancement: true,
            iterate_critic: true,
            local_norm: LocalNorm::Sampled,
            baseline: Baseline::None,
            validation_metric: ValidationMetric::F1VsObserved,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MlpacError::Config(m));
        if self.total_epochs == 0 {
            return bad("total_epochs must be >= 1".into());
        }
        if self.iterative_epochs > self.total_epochs {
            return bad(format!(
                "iterative_epochs ({}) exceeds total_epochs ({})",
                self.iterative_epochs, self.total_epochs
            ));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must be in (0, 1], got {}", self.gamma));
        }
        if self.sample_steps == 0 {
            return bad("sample_steps (T) must be >= 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if self.hidden.contains(&0) {
            return bad(format!(
                "hidden sizes must be positive, got {:?}",
                self.hidden
            ));
        }
        for (name, v) in [("alpha", self.alpha), ("critic_lr", self.critic_lr)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        self.reward.validate()
    }

    fn layer_dims(&self, d: usize, classes: usize) -> Vec<usize> {
        let mut dims = vec![d];
        dims.extend(&self.hidden);
        dims.push(classes);
        dims
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Pretrain,
    /// Critic and policy both updating.
    Iterative,
    /// Critic frozen.
    PolicyOnly,
    Supervised,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Pretrain => "pretrain",
            Phase::Iterative => "iterative",
            Phase::PolicyOnly => "policy_only",
            Phase::Supervised => "supervised",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// One row of the per-epoch log. Epoch 0 is the state before the main loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: Phase,
    pub w: Option<f64>,
    pub mean_reward: Option<f64>,
    pub val_score: f64,
    pub test: Option<Prf>,
    pub enhanced_count: usize,
}

pub const EPOCH_CSV_HEADER: &str =
    "epoch,phase,w,mean_reward,val_score,test_P,test_R,test_F1,enhanced_count";

impl EpochRecord {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{},{:.6},{},{},{},{}",
            self.epoch,
            self.phase,
            opt(self.w),
            opt(self.mean_reward),
            self.val_score,
            opt(self.test.map(|t| t.precision)),
            opt(self.test.map(|t| t.recall)),
            opt(self.test.map(|t| t.f1)),
            self.enhanced_count
        )
    }
}

pub fn write_epoch_csv<W: Write>(mut out: W, records: &[EpochRecord]) -> std::io::Result<()> {
    writeln!(out, "{EPOCH_CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Critic training targets: observed positives plus confident pseudo-positives.
#[derive(Clone, Debug, PartialEq)]
pub struct EnhancedLabels {
    pub labels: Vec<Vec<u8>>,
}

impl EnhancedLabels {
    pub fn from_observed(observed: &[Vec<u8>]) -> Self {
        EnhancedLabels {
            labels: observed.to_vec(),
        }
    }

    pub fn positive_count(&self) -> usize {
        self.labels.iter().flatten().filter(|&&l| l == 1).count()
    }

    pub fn is_superset_of(&self, observed: &[Vec<u8>]) -> bool {
        self.labels.len() == observed.len()
            && self
                .labels
                .iter()
                .zip(observed)
                .all(|(e, o)| e.len() == o.len() && e.iter().zip(o).all(|(&e, &o)| e >= o))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineVariant {
    /// Unknown labels read as negatives, uniform weights.
    NegativeMode,
    PosWeight,
    /// Negative sampling, ten unlabeled cells kept per positive.
    NegWeight,
    /// Negative mode whose targets are enhanced with the model's own
    /// confident positives after each epoch.
    SelfTraining,
}

impl BaselineVariant {
    pub fn critic_mode(self) -> CriticMode {
        match self {
            BaselineVariant::PosWeight => CriticMode::PosWeight { value: None },
            BaselineVariant::NegWeight => CriticMode::NEG_WEIGHT_DEFAULT,
            BaselineVariant::NegativeMode | BaselineVariant::SelfTraining => CriticMode::Plain,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            BaselineVariant::NegativeMode => "negative",
            BaselineVariant::PosWeight => "pos_weight",
            BaselineVariant::NegWeight => "neg_weight",
            BaselineVariant::SelfTraining => "self_training",
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainResult {
    pub method: String,
    pub best_policy: DenseModel,
    /// `None` when the pre-loop model was never beaten.
    pub best_epoch: Option<usize>,
    pub best_score: f64,
    pub final_policy: DenseModel,
    pub final_critic: Option<DenseModel>,
    pub records: Vec<EpochRecord>,
    pub final_enhanced: EnhancedLabels,
}

/// Observation points inside a training run.
pub trait TrainHooks {
    /// Called with the labels each global reward is computed against.
    fn on_global_reward(&mut self, _instance: usize, _labels: &[u8]) {}
    fn on_epoch(&mut self, _record: &EpochRecord, _critic: Option<&DenseModel>) {}
    /// Called whenever the best policy changes (for MLPAC also once for the
    /// pretrained policy).
    fn on_best(&mut self, _epoch: usize, _policy: &DenseModel) -> Result<()> {
        Ok(())
    }
}

pub struct NoHooks;

impl TrainHooks for NoHooks {}

/// Global-reward weight for a 0-based epoch.
pub fn reward_weight(epoch: usize, spec: &RewardSpec, total_epochs: usize) -> f64 {
    match spec.decay {
        WeightDecay::Constant => spec.w0,
        WeightDecay::Linear => {
            if total_epochs <= 1 {
                spec.w0
            } else {
                let frac = epoch.min(total_epochs - 1) as f64 / (total_epochs - 1) as f64;
                spec.w0 * (1.0 - 0.9 * frac)
            }
        }
    }
}

fn check_shapes(data: &PartialDataset, other: &PartialDataset) -> Result<()> {
    if data.is_empty() {
        return Err(MlpacError::Input("training set is empty".into()));
    }
    if data.dim() != other.dim() || data.num_classes() != other.num_classes() {
        return Err(MlpacError::Input(format!(
            "dataset shapes differ: d {} vs {}, classes {} vs {}",
            data.dim(),
            other.dim(),
            data.num_classes(),
            other.num_classes()
        )));
    }
    Ok(())
}

/// One epoch of weighted-BCE descent over shuffled mini-batches.
fn supervised_epoch(
    model: DenseModel,
    features: &[Vec<f64>],
    labels: &[Vec<u8>],
    mode: CriticMode,
    opt: &mut Optimizer,
    batch_size: usize,
    stream: (u64, u64),
) -> Result<DenseModel> {
    let (seed, epoch) = stream;
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.shuffle(&mut substream(seed, &[tag::SHUFFLE, epoch]));
    let mut model = model;
    for (b, chunk) in order.chunks(batch_size).enumerate() {
        let xs: Vec<Vec<f64>> = chunk.iter().map(|&i| features[i].clone()).collect();
        let ys: Vec<Vec<u8>> = chunk.iter().map(|&i| labels[i].clone()).collect();
        let (_, g) = critic_loss_and_grad(
            &model,
            &xs,
            &ys,
            mode,
            derive(seed, &[tag::NEG_SAMPLE, epoch, b as u64]),
        )?;
        model = opt.apply(&model, &g, Direction::Descend)?;
    }
    Ok(model)
}

/// Negative-mode pretraining of the policy and the critic for exactly
/// `pretrain_epochs` epochs.
pub fn pretrain(data: &PartialDataset, config: &TrainConfig) -> Result<(DenseModel, DenseModel)> {
    config.validate()?;
    let dims = config.layer_dims(data.dim(), data.num_classes());
    let mut policy = DenseModel::new(&dims, derive(config.seed, &[POLICY_INIT]))?;
    let mut critic = DenseModel::new(&dims, derive(config.seed, &[CRITIC_INIT]))?;
    let mut p_opt = Optimizer::new(config.critic_lr, config.momentum);
    let mut c_opt = Optimizer::new(config.critic_lr, config.momentum);
    let p_seed = derive(config.seed, &[PRETRAIN_POLICY]);
    let c_seed = derive(config.seed, &[PRETRAIN_CRITIC]);
    for e in 0..config.pretrain_epochs as u64 {
        policy = supervised_epoch(
            policy,
            &data.features,
            &data.observed,
            CriticMode::Plain,
            &mut p_opt,
            config.batch_size,
            (p_seed, e),
        )?;
        critic = supervised_epoch(
            critic,
            &data.features,
            &data.observed,
            CriticMode::Plain,
            &mut c_opt,
            config.batch_size,
            (c_seed, e),
        )?;
    }
    Ok((policy, critic))
}

/// Cell `(i, c)` is positive iff observed, or the policy puts probability
/// above `gamma` on it (hence predicts it) and the critic predicts it too.
pub fn enhance_labels(
    policy: &DenseModel,
    critic: &DenseModel,
    data: &PartialDataset,
    gamma: f64,
) -> Result<EnhancedLabels> {
    let mut labels = Vec::with_capacity(data.len());
    for (x, obs) in data.features.iter().zip(&data.observed) {
        let pp = policy.forward(x)?;
        let cp = critic.forward(x)?;
        labels.push(
            obs.iter()
                .enumerate()
                .map(|(c, &o)| (o == 1 || (pp[c] > gamma && pp[c] > 0.5 && cp[c] > 0.5)) as u8)
                .collect(),
        );
    }
    Ok(EnhancedLabels { labels })
}

/// F1 of the policy's predictions against observed labels (unknowns as negatives).
pub fn validation_eval(policy: &DenseModel, val: &PartialDataset) -> Result<f64> {
    let preds = val
        .features
        .iter()
        .map(|x| learners::policy_predict(policy, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(evalkit::prf1(&preds, &val.observed_as_signs()).2)
}

/// Metrics of a model on `±1` targets, with probabilities as AP scores.
pub fn evaluate_model(
    model: &DenseModel,
    features: &[Vec<f64>],
    targets: &[Vec<i8>],
    kind: TargetKind,
) -> Result<MetricsReport> {
    let scores = features
        .iter()
        .map(|x| model.forward(x))
        .collect::<Result<Vec<_>>>()?;
    let preds: Vec<_> = scores.iter().map(|p| predict_from_probs(p)).collect();
    Ok(evalkit::report(&preds, &scores, targets, kind))
}

fn test_prf(model: &DenseModel, test: Option<&FullDataset>) -> Result<Option<Prf>> {
    test.map(|t| {
        let r = evaluate_model(model, &t.features, &t.true_labels, TargetKind::GroundTruth)?;
        Ok(Prf {
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
        })
    })
    .transpose()
}

fn at_epoch(err: MlpacError, epoch: usize) -> MlpacError {
    match err {
        MlpacError::Numeric(msg) if !msg.contains("epoch") => {
            MlpacError::Numeric(format!("epoch {epoch}: {msg}"))
        }
        other => other,
    }
}

fn ensure_finite(model: &DenseModel, epoch: usize) -> Result<()> {
    if model.params().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(MlpacError::Numeric(format!(
            "policy parameters diverged to NaN/inf in epoch {epoch}"
        )))
    }
}

struct Best {
    policy: DenseModel,
    epoch: Option<usize>,
    score: f64,
}

impl Best {
    fn offer(
        &mut self,
        epoch: usize,
        policy: &DenseModel,
        score: f64,
        hooks: &mut dyn TrainHooks,
    ) -> Result<()> {
        if score > self.score {
            self.policy = policy.clone();
            self.epoch = Some(epoch);
            self.score = score;
            hooks.on_best(epoch, policy)?;
        }
        Ok(())
    }
}

pub fn run_mlpac(
    data: &PartialDataset,
    val: &PartialDataset,
    test: Option<&FullDataset>,
    config: &TrainConfig,
) -> Result<TrainResult> {
    run_mlpac_with_hooks(data, val, test, config, &mut NoHooks)
}

/// The full policy-gradient training loop.
pub fn run_mlpac_with_hooks(
    data: &PartialDataset,
    val: &PartialDataset,
    test: Option<&FullDataset>,
    config: &TrainConfig,
    hooks: &mut dyn TrainHooks,
) -> Result<TrainResult> {
    config.validate()?;
    check_shapes(data, val)?;
    let (mut policy, mut critic) = pretrain(data, config)?;
    let classes = data.num_classes();
    let observed = &data.observed;
    let mut enhanced = EnhancedLabels::from_observed(observed);

    let mut best = Best {
        policy: policy.clone(),
        epoch: None,
        score: validation_eval(&policy, val)?,
    };
    hooks.on_best(0, &policy)?;
    let mut records = vec![EpochRecord {
        epoch: 0,
        phase: Phase::Pretrain,
        w: None,
        mean_reward: None,
        val_score: best.score,
        test: test_prf(&policy, test)?,
        enhanced_count: enhanced.positive_count(),
    }];
    hooks.on_epoch(&records[0], Some(&critic));

    let rl_seed = derive(config.seed, &[RL_PHASE]);
    let mut p_opt = Optimizer::new(config.alpha, config.momentum);
    let mut c_opt = Optimizer::new(config.critic_lr, config.momentum);
    let t_steps = config.sample_steps;

    for e in 0..config.total_epochs {
        let ep = e as u64;
        let w = reward_weight(e, &config.reward, config.total_epochs);
        let critic_active = config.iterate_critic && e < config.iterative_epochs;
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut substream(rl_seed, &[tag::SHUFFLE, ep]));
        let mut reward_sum = 0.0;
        let mut reward_n = 0usize;

        let mut epoch_body = || -> Result<()> {
            for (b, chunk) in order.chunks(config.batch_size).enumerate() {
                let xs: Vec<Vec<f64>> = chunk.iter().map(|&i| data.features[i].clone()).collect();
                if critic_active {
                    let ys: Vec<Vec<u8>> =
                        chunk.iter().map(|&i| enhanced.labels[i].clone()).collect();
                    let (_, g) = critic_loss_and_grad(
                        &critic,
                        &xs,
                        &ys,
                        CriticMode::Plain,
                        derive(rl_seed, &[tag::NEG_SAMPLE, ep, b as u64]),
                    )?;
                    critic = c_opt.apply(&critic, &g, Direction::Descend)?;
                }

                let mut rollouts = Vec::with_capacity(chunk.len());
                for (j, (&i, x)) in chunk.iter().zip(&xs).enumerate() {
                    let pp = policy.forward(x)?;
                    let cp = critic.forward(x)?;
                    let obs = &observed[i];
                    let actions = sample_actions(
                        &pp,
                        t_steps,
                        derive(rl_seed, &[tag::ACTIONS, ep, i as u64]),
                    );
                    let mut rewards = Vec::with_capacity(t_steps);
                    let mut log_probs = Vec::with_capacity(t_steps);
                    for (t, a) in actions.iter().enumerate() {
                        let mut r = 0.0;
                        if config.local_reward {
                            let s = sample_reward_classes(
                                obs,
                                config.reward.rho,
                                derive(config.reward.seed, &[ep, i as u64, t as u64]),
                            );
                            let sum: f64 = s
                                .iter()
                                .map(|&c| local_reward(cp[c], a.is_positive(c)))
                                .sum();
                            let norm = match config.local_norm {
                                LocalNorm::Sampled => s.len(),
                                LocalNorm::AllClasses => classes,
                            };
                            r += sum / norm as f64;
                        }
                        if config.global_reward != GlobalRewardKind::None {
                            hooks.on_global_reward(i, obs);
                            r += w * config.global_reward.score(obs, a);
                        }
                        rewards.push(r);
                        log_probs.push(learners::action_log_prob(&pp, a));
                    }
                    reward_sum += rewards.iter().sum::<f64>();
                    reward_n += rewards.len();
                    rollouts.push(SampledRollout {
                        instance: j,
                        actions,
                        rewards,
                        log_probs,
                    });
                }
                let g = learners::reinforce_batch_gradient_with(
                    &policy,
                    &xs,
                    &rollouts,
                    config.baseline,
                )?;
                policy = p_opt.apply(&policy, &g, Direction::Ascend)?;
                ensure_finite(&policy, e + 1)?;
            }
            Ok(())
        };
        epoch_body().map_err(|err| at_epoch(err, e + 1))?;

        enhanced = if config.enhancement {
            enhance_labels(&policy, &critic, data, config.gamma)?
        } else {
            EnhancedLabels::from_observed(observed)
        };
        let score = validation_eval(&policy, val)?;
        best.offer(e + 1, &policy, score, hooks)?;
        let record = EpochRecord {
            epoch: e + 1,
            phase: if critic_active {
                Phase::Iterative
            } else {
                Phase::PolicyOnly
            },
            w: Some(w),
            mean_reward: Some(reward_sum / reward_n.max(1) as f64),
            val_score: score,
            test: test_prf(&policy, test)?,
            enhanced_count: enhanced.positive_count(),
        };
        hooks.on_epoch(&record, Some(&critic));
        records.push(record);
    }

    Ok(TrainResult {
        method: "mlpac".into(),
        best_policy: best.policy,
        best_epoch: best.epoch,
        best_score: best.score,
        final_policy: policy,
        final_critic: Some(critic),
        records,
        final_enhanced: enhanced,
    })
}

pub fn run_baseline(
    data: &PartialDataset,
    val: &PartialDataset,
    test: Option<&FullDataset>,
    variant: BaselineVariant,
    config: &TrainConfig,
) -> Result<TrainResult> {
    run_baseline_with_hooks(data, val, test, variant, config, &mut NoHooks)
}

/// A single supervised network trained for `total_epochs` epochs under the
/// variant's loss weighting, keeping the best validation checkpoint.
pub fn run_baseline_with_hooks(
    data: &PartialDataset,
    val: &PartialDataset,
    test: Option<&FullDataset>,
    variant: BaselineVariant,
    config: &TrainConfig,
    hooks: &mut dyn TrainHooks,
) -> Result<TrainResult> {
    config.validate()?;
    check_shapes(data, val)?;
    let dims = config.layer_dims(data.dim(), data.num_classes());
    let mut model = DenseModel::new(&dims, derive(config.seed, &[POLICY_INIT]))?;
    let mode = variant.critic_mode();
    let seed = derive(config.seed, &[BASELINE_PHASE]);
    let mut opt = Optimizer::new(config.critic_lr, config.momentum);
    let mut labels = EnhancedLabels::from_observed(&data.observed);

    let mut best = Best {
        policy: model.clone(),
        epoch: None,
        // an untrained network is never a candidate
        score: f64::NEG_INFINITY,
    };
    let mut records = vec![EpochRecord {
        epoch: 0,
        phase: Phase::Supervised,
        w: None,
        mean_reward: None,
        val_score: validation_eval(&model, val)?,
        test: test_prf(&model, test)?,
        enhanced_count: labels.positive_count(),
    }];
    hooks.on_epoch(&records[0], None);

    for e in 0..config.total_epochs {
        model = supervised_epoch(
            model,
            &data.features,
            &labels.labels,
            mode,
            &mut opt,
            config.batch_size,
            (seed, e as u64),
        )
        .map_err(|err| at_epoch(err, e + 1))?;
        ensure_finite(&model, e + 1)?;
        if variant == BaselineVariant::SelfTraining {
            let mut next = Vec::with_capacity(data.len());
            for (x, obs) in data.features.iter().zip(&data.observed) {
                let p = model.forward(x)?;
                next.push(
                    obs.iter()
                        .zip(&p)
                        .map(|(&o, &pc)| (o == 1 || (pc > config.gamma && pc > 0.5)) as u8)
                        .collect(),
                );
            }
            labels = EnhancedLabels { labels: next };
        }
        let score = validation_eval(&model, val)?;
        best.offer(e + 1, &model, score, hooks)?;
        let record = EpochRecord {
            epoch: e + 1,
            phase: Phase::Supervised,
            w: None,
            mean_reward: None,
            val_score: score,
            test: test_prf(&model, test)?,
            enhanced_count: labels.positive_count(),
        };
        hooks.on_epoch(&record, None);
        records.push(record);
    }

    Ok(TrainResult {
        method: variant.tag().into(),
        best_policy: best.policy,
        best_epoch: best.epoch,
        best_score: best.score,
        final_policy: model,
        final_critic: None,
        records,
        final_enhanced: labels,
    })
}
