//! Precision, recall, F1 and (mean) average precision.
//!
//! P/R/F1 are micro-averaged over every (instance, class) cell. Average
//! precision ranks instances by score (descending, ties by instance index)
//! and is undefined for classes without positives; such classes are left
//! out of the mean.

use serde::{Deserialize, Serialize};

use crate::error::{MlpacError, Result};
use crate::rewards::ActionVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    GroundTruth,
    ObservedProxy,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        f1_from(self.precision(), self.recall())
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_from(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `None` for classes without a positive target.
    pub per_class_ap: Vec<Option<f64>>,
    /// `None` when no class has a positive target.
    pub map: Option<f64>,
    pub counts: Counts,
    pub target_kind: TargetKind,
}

pub fn confusion(predictions: &[ActionVector], targets: &[Vec<i8>]) -> Counts {
    assert_eq!(predictions.len(), targets.len(), "instance count mismatch");
    let mut counts = Counts::default();
    for (pred, target) in predictions.iter().zip(targets) {
        assert_eq!(pred.len(), target.len(), "class count mismatch");
        for (p, &t) in pred.iter().zip(target) {
            match (p, t == 1) {
                (true, true) => counts.tp += 1,
                (true, false) => counts.fp += 1,
                (false, true) => counts.fn_ += 1,
                (false, false) => {}
            }
        }
    }
    counts
}

/// Micro-averaged `(precision, recall, f1)`.
pub fn prf1(predictions: &[ActionVector], targets: &[Vec<i8>]) -> (f64, f64, f64) {
    let c = confusion(predictions, targets);
    (c.precision(), c.recall(), c.f1())
}

/// AP of one class: mean over positives of precision at the positive's rank.
/// `None` when there are no positives.
pub fn average_precision(scores: &[f64], targets: &[i8]) -> Option<f64> {
    assert_eq!(scores.len(), targets.len(), "score/target length mismatch");
    let n_pos = targets.iter().filter(|&&t| t == 1).count();
    if n_pos == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if targets[i] == 1 {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Some(sum / n_pos as f64)
}

/// Per-class AP over an instance-major score matrix.
pub fn per_class_ap(scores: &[Vec<f64>], targets: &[Vec<i8>]) -> Vec<Option<f64>> {
    assert_eq!(scores.len(), targets.len(), "instance count mismatch");
    let classes = targets.first().map_or(0, Vec::len);
    (0..classes)
        .map(|c| {
            let s: Vec<f64> = scores.iter().map(|row| row[c]).collect();
            let t: Vec<i8> = targets.iter().map(|row| row[c]).collect();
            average_precision(&s, &t)
        })
        .collect()
}

/// Mean of the defined per-class APs.
pub fn mean_ap(scores: &[Vec<f64>], targets: &[Vec<i8>]) -> Result<f64> {
    let defined: Vec<f64> = per_class_ap(scores, targets)
        .into_iter()
        .flatten()
        .collect();
    if defined.is_empty() {
        return Err(MlpacError::Metric(
            "no class has a positive target; mAP undefined".into(),
        ));
    }
    Ok(defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Full report from thresholded predictions, raw scores and `±1` targets.
pub fn report(
    predictions: &[ActionVector],
    scores: &[Vec<f64>],
    targets: &[Vec<i8>],
    target_kind: TargetKind,
) -> MetricsReport {
    let counts = confusion(predictions, targets);
    let aps = per_class_ap(scores, targets);
    let defined: Vec<f64> = aps.iter().flatten().copied().collect();
    MetricsReport {
        precision: counts.precision(),
        recall: counts.recall(),
        f1: counts.f1(),
        map: (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64),
        per_class_ap: aps,
        counts,
        target_kind,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn av(signs: &[i8]) -> ActionVector {
        ActionVector::from_signs(signs.to_vec()).unwrap()
    }

    #[test]
    fn perfect_and_empty_predictions() {
        let t = vec![vec![1, -1, 1], vec![-1, -1, 1]];
        let preds: Vec<ActionVector> = t.iter().map(|r| av(r)).collect();
        assert_eq!(prf1(&preds, &t), (1.0, 1.0, 1.0));
        let none = vec![ActionVector::all(3, false); 2];
        assert_eq!(prf1(&none, &t), (0.0, 0.0, 0.0));
    }

    #[test]
    fn counts_example() {
        // TP=2, FP=1, FN=3
        let preds = vec![av(&[1, 1, 1, -1, -1, -1])];
        let t = vec![vec![1, 1, -1, 1, 1, 1]];
        let c = confusion(&preds, &t);
        assert_eq!(
            c,
            Counts {
                tp: 2,
                fp: 1,
                fn_: 3
            }
        );
        let (p, r, f) = prf1(&preds, &t);
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
        assert!((r - 0.4).abs() < 1e-15);
        assert!((f - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[0.9, 0.8, 0.1], &[1, 1, -1]), Some(1.0));
        let ap = average_precision(&[0.9, 0.8, 0.7], &[-1, 1, 1]).unwrap();
        assert!((ap - 7.0 / 12.0).abs() < 1e-15);
        let ap = average_precision(&[0.5, 0.4, 0.3, 0.2, 0.1], &[-1, -1, -1, -1, 1]).unwrap();
        assert!((ap - 0.2).abs() < 1e-15);
        assert_eq!(average_precision(&[0.5, 0.4], &[-1, -1]), None);
    }

    #[test]
    fn ties_are_broken_by_index() {
        // equal scores: instance 0 ranks first
        assert_eq!(average_precision(&[0.5, 0.5], &[1, -1]), Some(1.0));
        assert_eq!(average_precision(&[0.5, 0.5], &[-1, 1]), Some(0.5));
    }

    #[test]
    fn map_examples() {
        let scores = vec![vec![0.9, 0.1], vec![0.1, 0.9]];
        let t = vec![vec![1, -1], vec![-1, 1]];
        assert_eq!(mean_ap(&scores, &t).unwrap(), 1.0);
        // class 0 AP 0.5, class 1 AP 1.0
        let scores = vec![vec![0.9, 0.9], vec![0.1, 0.1]];
        let t = vec![vec![-1, 1], vec![1, -1]];
        assert_eq!(mean_ap(&scores, &t).unwrap(), 0.75);
        assert!(matches!(
            mean_ap(&scores, &[vec![-1, -1], vec![-1, -1]]),
            Err(MlpacError::Metric(_))
        ));
    }

    #[test]
    fn report_serializes_with_undefined_ap() {
        let t = vec![vec![1, -1]];
        let r = report(
            &[av(&[1, -1])],
            &[vec![0.8, 0.1]],
            &t,
            TargetKind::GroundTruth,
        );
        assert_eq!(r.per_class_ap, vec![Some(1.0), None]);
        assert_eq!(r.map, Some(1.0));
        let json = serde_json::to_string(&r).unwrap();
        let back: MetricsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    proptest! {
        #[test]
        fn f1_is_a_harmonic_mean(
            bits in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..60),
        ) {
            let preds: Vec<ActionVector> = bits.iter().map(|(p, _)| ActionVector::from_bools(vec![*p])).collect();
            let t: Vec<Vec<i8>> = bits.iter().map(|(_, t)| vec![if *t { 1 } else { -1 }]).collect();
            let (p, r, f) = prf1(&preds, &t);
            prop_assert!(f <= (2.0 * p).min(2.0 * r) + 1e-12);
            prop_assert!(f <= p.max(r) + 1e-12);
            // instance permutation
            let mut rp = preds.clone(); rp.reverse();
            let mut rt = t.clone(); rt.reverse();
            prop_assert_eq!(prf1(&rp, &rt), (p, r, f));
        }

        #[test]
        fn ap_invariant_under_monotone_transform(
            rows in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 1..40),
        ) {
            let s: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let t: Vec<i8> = rows.iter().map(|r| if r.1 { 1 } else { -1 }).collect();
            let warped: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
            prop_assert_eq!(average_precision(&s, &t), average_precision(&warped, &t));
        }
    }
}
