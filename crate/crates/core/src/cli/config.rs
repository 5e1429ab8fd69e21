//! Training configuration as seen from the command line: task profile,
//! optional TOML file, then individual flags, each layer overriding the last.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use crate::error::{MlpacError, Result};
use crate::learners::Baseline;
use crate::rewards::{GlobalRewardKind, LocalNorm, WeightDecay};
use crate::trainer::TrainConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// w0=10, T=10, gamma=0.95, rho=0.4
    Multilabel,
    /// w0=20, T=100, gamma=0.8, rho=0.2
    BinaryPu,
}

impl Profile {
    pub fn config(self) -> TrainConfig {
        let mut c = TrainConfig::default();
        match self {
            Profile::Multilabel => {
                c.reward.w0 = 10.0;
                c.sample_steps = 10;
                c.gamma = 0.95;
                c.reward.rho = 0.4;
            }
            Profile::BinaryPu => {
                c.reward.w0 = 20.0;
                c.sample_steps = 100;
                c.gamma = 0.8;
                c.reward.rho = 0.2;
            }
        }
        c
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GlobalArg {
    Recall,
    Precision,
    F1,
    None,
}

impl From<GlobalArg> for GlobalRewardKind {
    fn from(g: GlobalArg) -> Self {
        match g {
            GlobalArg::Recall => GlobalRewardKind::Recall,
            GlobalArg::Precision => GlobalRewardKind::Precision,
            GlobalArg::F1 => GlobalRewardKind::F1,
            GlobalArg::None => GlobalRewardKind::None,
        }
    }
}

/// Flags shared by `train` and `sweep`.
#[derive(Args, Clone, Debug, Default)]
pub struct TrainArgs {
    /// Hyperparameter defaults for the task type.
    #[arg(long, value_enum, default_value = "multilabel")]
    pub profile: Option<Profile>,
    /// TOML file with training-config keys; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub iterative_epochs: Option<usize>,
    #[arg(long)]
    pub pretrain_epochs: Option<usize>,
    /// Actions sampled per instance (T).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Policy learning rate.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub critic_lr: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Initial global-reward weight.
    #[arg(long)]
    pub w0: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Hidden layer widths, e.g. `64,32`.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    pub global_reward: Option<GlobalArg>,
    #[arg(long, conflicts_with = "global_reward")]
    pub no_global_reward: bool,
    #[arg(long)]
    pub no_local_reward: bool,
    #[arg(long)]
    pub no_enhancement: bool,
    /// Never train the critic after pretraining.
    #[arg(long)]
    pub no_iterative: bool,
    /// Use every unknown class in the local reward (rho = 1).
    #[arg(long, conflicts_with = "rho")]
    pub no_action_sampling: bool,
    /// Keep the global-reward weight at w0.
    #[arg(long)]
    pub constant_w: bool,
    /// Average local rewards over all classes instead of the sampled set.
    #[arg(long)]
    pub normalize_all_classes: bool,
    /// Subtract each instance's mean sampled reward.
    #[arg(long)]
    pub mean_baseline: bool,
}

/// Deep-merge `over` into `base`; tables merge key by key, anything else replaces.
fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

pub fn apply_config_file(base: &TrainConfig, path: &Path) -> Result<TrainConfig> {
    let text = fs::read_to_string(path).map_err(|e| MlpacError::io(path, e))?;
    let over: toml::Table = toml::from_str(&text)
        .map_err(|e| MlpacError::Config(format!("{}: {e}", path.display())))?;
    let mut value = toml::Value::try_from(base)
        .map_err(|e| MlpacError::Config(format!("cannot encode config: {e}")))?;
    merge(&mut value, toml::Value::Table(over));
    value
        .try_into()
        .map_err(|e| MlpacError::Config(format!("{}: {e}", path.display())))
}

impl TrainArgs {
    /// Profile, then config file, then flags. The seed is set by the caller.
    pub fn resolve(&self) -> Result<TrainConfig> {
        let mut c = self.profile.unwrap_or(Profile::Multilabel).config();
        if let Some(path) = &self.config {
            c = apply_config_file(&c, path)?;
        }
        macro_rules! set {
            ($field:expr, $arg:expr) => {
                if let Some(v) = $arg.clone() {
                    $field = v;
                }
            };
        }
        set!(c.total_epochs, self.epochs);
        set!(c.iterative_epochs, self.iterative_epochs);
        set!(c.pretrain_epochs, self.pretrain_epochs);
        set!(c.sample_steps, self.samples);
        set!(c.alpha, self.alpha);
        set!(c.critic_lr, self.critic_lr);
        set!(c.momentum, self.momentum);
        set!(c.gamma, self.gamma);
        set!(c.reward.w0, self.w0);
        set!(c.reward.rho, self.rho);
        set!(c.batch_size, self.batch_size);
        set!(c.hidden, self.hidden);
        if let Some(g) = self.global_reward {
            c.global_reward = g.into();
        }
        if self.no_global_reward {
            c.global_reward = GlobalRewardKind::None;
        }
        if self.no_local_reward {
            c.local_reward = false;
        }
        if self.no_enhancement {
            c.enhancement = false;
        }
        if self.no_iterative {
            c.iterate_critic = false;
        }
        if self.no_action_sampling {
            c.reward.rho = 1.0;
        }
        if self.constant_w {
            c.reward.decay = WeightDecay::Constant;
        }
        if self.normalize_all_classes {
            c.local_norm = LocalNorm::AllClasses;
        }
        if self.mean_baseline {
            c.baseline = Baseline::InstanceMean;
        }
        if c.iterative_epochs > c.total_epochs {
            c.iterative_epochs = c.total_epochs;
        }
        c.validate()?;
        Ok(c)
    }
}
