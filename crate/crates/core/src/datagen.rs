//! Synthetic multi-label data with known ground truth, positive-unlabeled
//! masking, binary PU construction and the JSON-lines dataset format.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{MlpacError, Result};
use crate::rng::{substream, tag, unit_uniform};

/// Fully labeled data; labels are `+1` / `-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FullDataset {
    pub features: Vec<Vec<f64>>,
    pub true_labels: Vec<Vec<i8>>,
    pub class_names: Vec<String>,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum Provenance {
    /// Masked from a synthetic [`FullDataset`].
    Synthetic { source_seed: u64, mask_seed: u64 },
    /// Observed labels of unknown origin; no completeness guarantees.
    External,
}

/// Positive-unlabeled data: `observed[i][c] == 1` is a known positive,
/// `0` is unknown. `truth` keeps the hidden labels of synthetic data for
/// evaluation only.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialDataset {
    pub features: Vec<Vec<f64>>,
    pub observed: Vec<Vec<u8>>,
    pub class_names: Vec<String>,
    pub annotation_ratio: f64,
    pub provenance: Provenance,
    pub truth: Option<Vec<Vec<i8>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    Full(FullDataset),
    Partial(PartialDataset),
}

impl FullDataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn positive_count(&self) -> usize {
        self.true_labels
            .iter()
            .flatten()
            .filter(|&&y| y == 1)
            .count()
    }

    /// Empirical positive frequency of each class.
    pub fn class_rates(&self) -> Vec<f64> {
        let n = self.len().max(1) as f64;
        (0..self.num_classes())
            .map(|c| self.true_labels.iter().filter(|row| row[c] == 1).count() as f64 / n)
            .collect()
    }

    pub fn select(&self, idx: &[usize]) -> FullDataset {
        FullDataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            true_labels: idx.iter().map(|&i| self.true_labels[i].clone()).collect(),
            class_names: self.class_names.clone(),
            seed: self.seed,
        }
    }

    /// Collapse to a single "class vs rest" column.
    pub fn to_binary(&self, positive_class: usize) -> Result<FullDataset> {
        if positive_class >= self.num_classes() {
            return Err(MlpacError::Input(format!(
                "class index {positive_class} out of range for {} classes",
                self.num_classes()
            )));
        }
        Ok(FullDataset {
            features: self.features.clone(),
            true_labels: self
                .true_labels
                .iter()
                .map(|row| vec![row[positive_class]])
                .collect(),
            class_names: vec![self.class_names[positive_class].clone()],
            seed: self.seed,
        })
    }

    /// Every positive observed; the `keep_ratio = 1` partial view.
    pub fn as_partial(&self) -> PartialDataset {
        PartialDataset {
            features: self.features.clone(),
            observed: self
                .true_labels
                .iter()
                .map(|row| row.iter().map(|&y| (y == 1) as u8).collect())
                .collect(),
            class_names: self.class_names.clone(),
            annotation_ratio: 1.0,
            provenance: Provenance::Synthetic {
                source_seed: self.seed,
                mask_seed: 0,
            },
            truth: Some(self.true_labels.clone()),
        }
    }
}

impl PartialDataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().flatten().filter(|&&o| o == 1).count()
    }

    pub fn select(&self, idx: &[usize]) -> PartialDataset {
        PartialDataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            observed: idx.iter().map(|&i| self.observed[i].clone()).collect(),
            class_names: self.class_names.clone(),
            annotation_ratio: self.annotation_ratio,
            provenance: self.provenance,
            truth: self
                .truth
                .as_ref()
                .map(|t| idx.iter().map(|&i| t[i].clone()).collect()),
        }
    }

    /// Observed labels as `±1` targets (unknown read as negative).
    pub fn observed_as_signs(&self) -> Vec<Vec<i8>> {
        self.observed
            .iter()
            .map(|row| row.iter().map(|&o| if o == 1 { 1 } else { -1 }).collect())
            .collect()
    }
}

/// Synthetic multi-label data.
///
/// Each class owns a unit-norm Gaussian prototype. An instance activates
/// each class independently with probability `positive_rate`, and its
/// features are the sum of active prototypes plus isotropic noise of scale
/// `cluster_spread`. Class `c` is positive when the projection of the
/// features on prototype `c` exceeds a threshold set so that
/// `round(positive_rate · n)` instances are positive, which makes every
/// class linearly separable.
pub fn generate_multilabel(
    n: usize,
    d: usize,
    num_classes: usize,
    positive_rate: f64,
    cluster_spread: f64,
    seed: u64,
) -> Result<FullDataset> {
    if n == 0 || d == 0 || num_classes == 0 {
        return Err(MlpacError::Config(
            "n, d and num_classes must all be >= 1".into(),
        ));
    }
    if !(positive_rate > 0.0 && positive_rate < 0.5) {
        return Err(MlpacError::Config(format!(
            "positive_rate must be in (0, 0.5), got {positive_rate}"
        )));
    }
    if !(cluster_spread.is_finite() && cluster_spread >= 0.0) {
        return Err(MlpacError::Config(format!(
            "cluster_spread must be finite and >= 0, got {cluster_spread}"
        )));
    }
    let k = (positive_rate * n as f64).round() as usize;
    if k == 0 || k >= n {
        return Err(MlpacError::Config(format!(
            "positive_rate {positive_rate} gives {k} positives out of {n}; infeasible"
        )));
    }

    let mut proto_rng = substream(seed, &[tag::PROTOTYPES]);
    let prototypes: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| proto_rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();

    let features: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut rng = substream(seed, &[tag::FEATURES, i as u64]);
            let mut x: Vec<f64> = (0..d)
                .map(|_| cluster_spread * rng.sample::<f64, _>(StandardNormal))
                .collect();
            for proto in &prototypes {
                if rng.random::<f64>() < positive_rate {
                    x.iter_mut().zip(proto).for_each(|(xi, pi)| *xi += pi);
                }
            }
            x
        })
        .collect();

    let mut true_labels = vec![vec![-1i8; num_classes]; n];
    for (c, proto) in prototypes.iter().enumerate() {
        let affinity: Vec<f64> = features
            .iter()
            .map(|x| x.iter().zip(proto).map(|(a, b)| a * b).sum())
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| affinity[b].total_cmp(&affinity[a]).then(a.cmp(&b)));
        for &i in &order[..k] {
            true_labels[i][c] = 1;
        }
    }

    Ok(FullDataset {
        features,
        true_labels,
        class_names: (0..num_classes).map(|c| format!("class_{c}")).collect(),
        seed,
    })
}

/// Keep each true positive cell with probability `keep_ratio`; every other
/// cell becomes unknown. The draw for cell `(i, c)` depends only on
/// `(seed, i, c)`, so a lower ratio always observes a subset of a higher one.
pub fn mask_positives(full: &FullDataset, keep_ratio: f64, seed: u64) -> Result<PartialDataset> {
    if !(keep_ratio > 0.0 && keep_ratio <= 1.0) {
        return Err(MlpacError::Config(format!(
            "keep_ratio must be in (0, 1], got {keep_ratio}"
        )));
    }
    let observed = full
        .true_labels
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(c, &y)| {
                    let kept =
                        y == 1 && unit_uniform(seed, &[tag::MASK, i as u64, c as u64]) < keep_ratio;
                    kept as u8
                })
                .collect()
        })
        .collect();
    Ok(PartialDataset {
        features: full.features.clone(),
        observed,
        class_names: full.class_names.clone(),
        annotation_ratio: keep_ratio,
        provenance: Provenance::Synthetic {
            source_seed: full.seed,
            mask_seed: seed,
        },
        truth: Some(full.true_labels.clone()),
    })
}

/// One class as positives, everything else negative, then PU-masked.
pub fn make_binary_pu(
    full: &FullDataset,
    positive_class: usize,
    keep_ratio: f64,
    seed: u64,
) -> Result<PartialDataset> {
    mask_positives(&full.to_binary(positive_class)?, keep_ratio, seed)
}

/// Deterministic shuffled split into `(train, val, test)` index sets.
pub fn split_indices(
    n: usize,
    val_frac: f64,
    test_frac: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    if !(val_frac >= 0.0 && test_frac >= 0.0 && val_frac + test_frac < 1.0) {
        return Err(MlpacError::Config(format!(
            "invalid split fractions val={val_frac} test={test_frac}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut substream(seed, &[tag::SPLIT]));
    let n_val = (val_frac * n as f64).round() as usize;
    let n_test = (test_frac * n as f64).round() as usize;
    let test = idx.split_off(n - n_test);
    let val = idx.split_off(n - n_test - n_val);
    if idx.is_empty() {
        return Err(MlpacError::Config(
            "split leaves no training instances".into(),
        ));
    }
    Ok((idx, val, test))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Full,
    Partial,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    n: usize,
    d: usize,
    num_classes: usize,
    class_names: Vec<String>,
    kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    annotation_ratio: Option<f64>,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y_true: Option<Vec<i8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y_obs: Option<Vec<u8>>,
}

impl Dataset {
    pub fn num_classes(&self) -> usize {
        match self {
            Dataset::Full(f) => f.num_classes(),
            Dataset::Partial(p) => p.num_classes(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Dataset::Full(f) => f.dim(),
            Dataset::Partial(p) => p.dim(),
        }
    }

    /// Serialise to the JSON-lines format (header line, then one row per instance).
    pub fn to_jsonl(&self) -> String {
        let (header, rows): (Header, Vec<Row>) = match self {
            Dataset::Full(f) => (
                Header {
                    n: f.len(),
                    d: f.dim(),
                    num_classes: f.num_classes(),
                    class_names: f.class_names.clone(),
                    kind: Kind::Full,
                    annotation_ratio: None,
                    seed: f.seed,
                    source_seed: None,
                },
                f.features
                    .iter()
                    .zip(&f.true_labels)
                    .map(|(x, y)| Row {
                        x: x.clone(),
                        y_true: Some(y.clone()),
                        y_obs: None,
                    })
                    .collect(),
            ),
            Dataset::Partial(p) => {
                let (seed, source_seed) = match p.provenance {
                    Provenance::Synthetic {
                        source_seed,
                        mask_seed,
                    } => (mask_seed, Some(source_seed)),
                    Provenance::External => (0, None),
                };
                (
                    Header {
                        n: p.len(),
                        d: p.dim(),
                        num_classes: p.num_classes(),
                        class_names: p.class_names.clone(),
                        kind: Kind::Partial,
                        annotation_ratio: Some(p.annotation_ratio),
                        seed,
                        source_seed,
                    },
                    p.features
                        .iter()
                        .enumerate()
                        .map(|(i, x)| Row {
                            x: x.clone(),
                            y_true: p.truth.as_ref().map(|t| t[i].clone()),
                            y_obs: Some(p.observed[i].clone()),
                        })
                        .collect(),
                )
            }
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for row in rows {
            out.push_str(&serde_json::to_string(&row).expect("row serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Dataset> {
        let mut lines = reader.lines().enumerate();
        let header_line = match lines.next() {
            Some((_, line)) => line.map_err(|e| MlpacError::Parse {
                line: 1,
                msg: e.to_string(),
            })?,
            None => {
                return Err(MlpacError::Parse {
                    line: 1,
                    msg: "empty file, expected header".into(),
                })
            }
        };
        let header: Header = serde_json::from_str(&header_line).map_err(|e| MlpacError::Parse {
            line: 1,
            msg: format!("bad header: {e}"),
        })?;
        if header.class_names.len() != header.num_classes {
            return Err(MlpacError::Schema {
                line: 1,
                msg: format!(
                    "{} class names for num_classes = {}",
                    header.class_names.len(),
                    header.num_classes
                ),
            });
        }
        if header.n == 0 || header.d == 0 || header.num_classes == 0 {
            return Err(MlpacError::Schema {
                line: 1,
                msg: "n, d and num_classes must be >= 1".into(),
            });
        }
        if header.kind == Kind::Partial {
            match header.annotation_ratio {
                Some(r) if r > 0.0 && r <= 1.0 => {}
                other => {
                    return Err(MlpacError::Schema {
                        line: 1,
                        msg: format!(
                            "partial dataset needs annotation_ratio in (0, 1], got {other:?}"
                        ),
                    })
                }
            }
        }

        let mut features = Vec::with_capacity(header.n);
        let mut truth: Vec<Vec<i8>> = Vec::with_capacity(header.n);
        let mut observed: Vec<Vec<u8>> = Vec::with_capacity(header.n);
        let mut has_truth = None;
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line.map_err(|e| MlpacError::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            if features.len() == header.n {
                return Err(MlpacError::Parse {
                    line: line_no,
                    msg: format!("more rows than the declared n = {}", header.n),
                });
            }
            let row: Row = serde_json::from_str(&line).map_err(|e| MlpacError::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
            let schema = |msg: String| MlpacError::Schema { line: line_no, msg };
            if row.x.len() != header.d {
                return Err(schema(format!(
                    "x has {} values, expected d = {}",
                    row.x.len(),
                    header.d
                )));
            }
            if row.x.iter().any(|v| !v.is_finite()) {
                return Err(schema("non-finite feature".into()));
            }
            if let Some(y) = &row.y_true {
                if y.len() != header.num_classes {
                    return Err(schema(format!(
                        "y_true has {} entries for {} classes",
                        y.len(),
                        header.num_classes
                    )));
                }
                if y.iter().any(|&v| v != 1 && v != -1) {
                    return Err(schema("y_true values must be -1 or 1".into()));
                }
            }
            match (has_truth, row.y_true.is_some()) {
                (None, t) => has_truth = Some(t),
                (Some(a), b) if a != b => {
                    return Err(schema("y_true present on some rows but not others".into()))
                }
                _ => {}
            }
            match header.kind {
                Kind::Full => {
                    let y = row
                        .y_true
                        .ok_or_else(|| schema("full dataset row without y_true".into()))?;
                    if row.y_obs.is_some() {
                        return Err(schema("full dataset row carries y_obs".into()));
                    }
                    truth.push(y);
                }
                Kind::Partial => {
                    let o = row
                        .y_obs
                        .ok_or_else(|| schema("partial dataset row without y_obs".into()))?;
                    if o.len() != header.num_classes {
                        return Err(schema(format!(
                            "y_obs has {} entries for {} classes",
                            o.len(),
                            header.num_classes
                        )));
                    }
                    if o.iter().any(|&v| v > 1) {
                        return Err(schema("y_obs values must be 0 or 1".into()));
                    }
                    if let Some(y) = &row.y_true {
                        if o.iter().zip(y).any(|(&o, &y)| o == 1 && y != 1) {
                            return Err(schema("observed positive is not a true positive".into()));
                        }
                        truth.push(y.clone());
                    }
                    observed.push(o);
                }
            }
            features.push(row.x);
        }
        if features.len() != header.n {
            return Err(MlpacError::Parse {
                line: features.len() + 2,
                msg: format!(
                    "file truncated: {} of {} rows present",
                    features.len(),
                    header.n
                ),
            });
        }

        Ok(match header.kind {
            Kind::Full => Dataset::Full(FullDataset {
                features,
                true_labels: truth,
                class_names: header.class_names,
                seed: header.seed,
            }),
            Kind::Partial => Dataset::Partial(PartialDataset {
                features,
                observed,
                class_names: header.class_names,
                annotation_ratio: header.annotation_ratio.expect("checked above"),
                provenance: match header.source_seed {
                    Some(source_seed) => Provenance::Synthetic {
                        source_seed,
                        mask_seed: header.seed,
                    },
                    None => Provenance::External,
                },
                truth: if has_truth == Some(true) {
                    Some(truth)
                } else {
                    None
                },
            }),
        })
    }
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| MlpacError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(ds.to_jsonl().as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| MlpacError::io(path, e))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| MlpacError::io(path, e))?;
    Dataset::from_jsonl(BufReader::new(file))
}
