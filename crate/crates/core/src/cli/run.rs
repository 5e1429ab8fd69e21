//! One training run: mask, split, train, evaluate, write the run directory.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use crate::datagen::{mask_positives, split_indices, Dataset, FullDataset, PartialDataset};
use crate::error::{MlpacError, Result};
use crate::evalkit::{MetricsReport, TargetKind};
use crate::netcore::DenseModel;
use crate::trainer::{
    evaluate_model, run_baseline_with_hooks, run_mlpac_with_hooks, write_epoch_csv,
    BaselineVariant, TrainConfig, TrainHooks, TrainResult,
};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const EPOCHS_FILE: &str = "epochs.csv";
pub const METRICS_FILE: &str = "metrics.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Mlpac,
    #[value(alias = "negative-mode")]
    Negative,
    #[value(alias = "pos_weight")]
    PosWeight,
    #[value(alias = "neg_weight")]
    NegWeight,
    #[value(alias = "self_training")]
    SelfTraining,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self.baseline() {
            None => "mlpac",
            Some(b) => b.tag(),
        }
    }

    fn baseline(self) -> Option<BaselineVariant> {
        match self {
            Method::Mlpac => None,
            Method::Negative => Some(BaselineVariant::NegativeMode),
            Method::PosWeight => Some(BaselineVariant::PosWeight),
            Method::NegWeight => Some(BaselineVariant::NegWeight),
            Method::SelfTraining => Some(BaselineVariant::SelfTraining),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Split {
    pub val_frac: f64,
    pub test_frac: f64,
}

/// Turn a loaded dataset into partial labels at `ratio`. Full datasets are
/// masked with `seed`; partial ones must already match the ratio if given.
pub fn partial_view(ds: &Dataset, ratio: Option<f64>, seed: u64) -> Result<PartialDataset> {
    match ds {
        Dataset::Full(full) => mask_positives(full, ratio.unwrap_or(1.0), seed),
        Dataset::Partial(p) => {
            if let Some(r) = ratio {
                if (r - p.annotation_ratio).abs() > 1e-12 {
                    return Err(MlpacError::Config(format!(
                        "dataset is already masked at ratio {}; cannot re-mask to {r}",
                        p.annotation_ratio
                    )));
                }
            }
            Ok(p.clone())
        }
    }
}

fn ground_truth(p: &PartialDataset, seed: u64) -> Option<FullDataset> {
    p.truth.as_ref().map(|t| FullDataset {
        features: p.features.clone(),
        true_labels: t.clone(),
        class_names: p.class_names.clone(),
        seed,
    })
}

#[derive(Debug, Serialize)]
pub struct RunMetrics {
    pub method: String,
    pub ratio: f64,
    pub seed: u64,
    pub best_epoch: Option<usize>,
    pub best_val_score: f64,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    /// Against hidden labels; absent for data without ground truth.
    pub test_ground_truth: Option<MetricsReport>,
    pub test_observed_proxy: MetricsReport,
    pub config: TrainConfig,
}

impl RunMetrics {
    /// Ground-truth report when available, else the observed proxy.
    pub fn headline(&self) -> &MetricsReport {
        self.test_ground_truth
            .as_ref()
            .unwrap_or(&self.test_observed_proxy)
    }

    pub fn summary_line(&self) -> String {
        let r = self.headline();
        format!(
            "method={} ratio={} P={:.4} R={:.4} F1={:.4}",
            self.method, self.ratio, r.precision, r.recall, r.f1
        )
    }
}

struct CheckpointWriter {
    path: PathBuf,
}

impl TrainHooks for CheckpointWriter {
    fn on_best(&mut self, _epoch: usize, policy: &DenseModel) -> Result<()> {
        fs::write(&self.path, policy.to_json()).map_err(|e| MlpacError::io(&self.path, e))
    }
}

/// Train `method` on `data` and write checkpoint, epoch log and metrics to `out`.
pub fn run_experiment(
    data: &PartialDataset,
    method: Method,
    config: &TrainConfig,
    split: Split,
    out: &Path,
) -> Result<RunMetrics> {
    fs::create_dir_all(out).map_err(|e| MlpacError::io(out, e))?;
    let (tr, va, te) = split_indices(data.len(), split.val_frac, split.test_frac, config.seed)?;
    if va.is_empty() || te.is_empty() {
        return Err(MlpacError::Config(
            "validation and test splits must be non-empty".into(),
        ));
    }
    let train = data.select(&tr);
    let val = data.select(&va);
    let test_partial = data.select(&te);
    let test_full = ground_truth(&test_partial, config.seed);

    let mut hooks = CheckpointWriter {
        path: out.join(CHECKPOINT_FILE),
    };
    let result: TrainResult = match method.baseline() {
        None => run_mlpac_with_hooks(&train, &val, test_full.as_ref(), config, &mut hooks)?,
        Some(b) => {
            run_baseline_with_hooks(&train, &val, test_full.as_ref(), b, config, &mut hooks)?
        }
    };

    let epochs_path = out.join(EPOCHS_FILE);
    let mut buf = Vec::new();
    write_epoch_csv(&mut buf, &result.records).map_err(|e| MlpacError::io(&epochs_path, e))?;
    fs::write(&epochs_path, buf).map_err(|e| MlpacError::io(&epochs_path, e))?;

    let model = &result.best_policy;
    let metrics = RunMetrics {
        method: method.tag().to_string(),
        ratio: data.annotation_ratio,
        seed: config.seed,
        best_epoch: result.best_epoch,
        best_val_score: result.best_score,
        train_size: tr.len(),
        val_size: va.len(),
        test_size: te.len(),
        test_ground_truth: test_full
            .as_ref()
            .map(|t| evaluate_model(model, &t.features, &t.true_labels, TargetKind::GroundTruth))
            .transpose()?,
        test_observed_proxy: evaluate_model(
            model,
            &test_partial.features,
            &test_partial.observed_as_signs(),
            TargetKind::ObservedProxy,
        )?,
        config: config.clone(),
    };
    let metrics_path = out.join(METRICS_FILE);
    let json = serde_json::to_string_pretty(&metrics)
        .map_err(|e| MlpacError::Input(format!("cannot encode metrics: {e}")))?;
    fs::write(&metrics_path, json + "\n").map_err(|e| MlpacError::io(&metrics_path, e))?;
    Ok(metrics)
}
