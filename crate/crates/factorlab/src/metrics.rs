//! Classification metrics over scored instances, and the response transforms
//! the analysis engines consume.
//!
//! All functions take a slice of real-valued scores (higher means more
//! positive) and a parallel slice of binary ground-truth labels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::input(format!(
            "scores ({}) and labels ({}) differ in length",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::input("scores must be finite"));
    }
    Ok(())
}

fn class_counts(labels: &[bool]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&l| l).count();
    (pos, labels.len() - pos)
}

/// Area under the ROC curve via the mid-rank Mann-Whitney statistic:
/// `(wins + 0.5 * ties) / (positives * negatives)` over all positive-negative
/// pairs, computed in O(n log n) from average ranks.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::stat(
            "AUC needs at least one positive and one negative instance",
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].partial_cmp(&scores[j]).unwrap());

    // Average ranks over tied score groups, 1-based.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let p = pos as f64;
    let n = neg as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// Average precision: mean over the positives, taken in descending-score
/// order, of the precision at that rank. Ties keep their input order.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (pos, _) = class_counts(labels);
    if pos == 0 {
        return Err(Error::stat("average precision needs at least one positive"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Stable descending sort: equal scores stay in input index order.
    order.sort_by(|&i, &j| scores[j].partial_cmp(&scores[i]).unwrap());

    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank0, &idx) in order.iter().enumerate() {
        if labels[idx] {
            hits += 1;
            sum += hits as f64 / (rank0 + 1) as f64;
        }
    }
    Ok(sum / pos as f64)
}

/// Sensitivity (true positive rate) and specificity (true negative rate) at a
/// score threshold; the decision is positive iff `score >= threshold`.
pub fn sens_spec(scores: &[f64], labels: &[bool], threshold: f64) -> Result<(f64, f64)> {
    check_lengths(scores, labels)?;
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::stat(
            "sensitivity/specificity need both classes present",
        ));
    }
    let mut tp = 0usize;
    let mut tn = 0usize;
    for (&s, &l) in scores.iter().zip(labels) {
        let decided_positive = s >= threshold;
        match (l, decided_positive) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            _ => {}
        }
    }
    Ok((tp as f64 / pos as f64, tn as f64 / neg as f64))
}

/// Default proportion clamp for [`logit`]: keeps AUC = 0 or 1 finite.
pub const DEFAULT_LOGIT_EPSILON: f64 = 1e-6;

/// `ln(p' / (1 - p'))` with `p' = clamp(p, eps, 1 - eps)`.
pub fn logit(p: f64, eps: f64) -> f64 {
    assert!(
        eps > 0.0 && eps < 0.5,
        "logit clamp must lie in (0, 0.5), got {eps}"
    );
    let p = p.clamp(eps, 1.0 - eps);
    (p / (1.0 - p)).ln()
}

/// The response transform applied after metric aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transform", rename_all = "lowercase")]
pub enum Transform {
    Identity,
    Logit { epsilon: f64 },
}

impl Transform {
    pub fn logit_default() -> Self {
        Transform::Logit {
            epsilon: DEFAULT_LOGIT_EPSILON,
        }
    }

    pub fn apply(&self, value: f64) -> f64 {
        match *self {
            Transform::Identity => value,
            Transform::Logit { epsilon } => logit(value, epsilon),
        }
    }
}

/// Which metric columns feed the measured response and how they are
/// transformed. Aggregation is always the arithmetic mean, taken before the
/// transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSpec {
    pub metrics: Vec<String>,
    #[serde(flatten)]
    pub transform: Transform,
}

impl ResponseSpec {
    pub fn new(metrics: &[&str], transform: Transform) -> Self {
        ResponseSpec {
            metrics: metrics.iter().map(|s| s.to_string()).collect(),
            transform,
        }
    }

    /// Mean of the named metrics, untransformed.
    pub fn aggregate(&self, record: &BTreeMap<String, f64>) -> Result<f64> {
        if self.metrics.is_empty() {
            return Err(Error::input("response spec names no metrics"));
        }
        let mut sum = 0.0;
        for name in &self.metrics {
            let v = record
                .get(name)
                .ok_or_else(|| Error::input(format!("metric '{name}' missing from record")))?;
            sum += v;
        }
        Ok(sum / self.metrics.len() as f64)
    }

    /// Transformed mean of the named metrics: the measured response.
    pub fn response(&self, record: &BTreeMap<String, f64>) -> Result<f64> {
        Ok(self.transform.apply(self.aggregate(record)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_perfect_and_ties() {
        assert_eq!(roc_auc(&[0.9, 0.1], &[true, false]).unwrap(), 1.0);
        assert_eq!(
            roc_auc(&[0.4, 0.4, 0.4, 0.4], &[true, false, true, false]).unwrap(),
            0.5
        );
    }

    #[test]
    fn auc_hand_counted() {
        // Pairs: (.9,.6) win, (.9,.2) win, (.4,.6) loss, (.4,.2) win -> 3/4.
        let auc = roc_auc(&[0.9, 0.4, 0.6, 0.2], &[true, true, false, false]).unwrap();
        assert!((auc - 0.75).abs() < 1e-15);
    }

    #[test]
    fn auc_rejects_single_class() {
        assert!(roc_auc(&[0.1, 0.2], &[true, true]).is_err());
        assert!(roc_auc(&[0.1, 0.2], &[false, false]).is_err());
    }

    #[test]
    fn ap_hand_values() {
        assert_eq!(average_precision(&[0.9, 0.1], &[true, false]).unwrap(), 1.0);
        assert_eq!(average_precision(&[0.9, 0.1], &[false, true]).unwrap(), 0.5);
        let ap = average_precision(&[0.9, 0.8, 0.7], &[true, false, true]).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!(average_precision(&[0.9], &[false]).is_err());
    }

    #[test]
    fn sens_spec_hand_values() {
        assert_eq!(
            sens_spec(&[0.9, 0.1], &[true, false], 0.5).unwrap(),
            (1.0, 1.0)
        );
        // Threshold above every score: nothing decided positive.
        assert_eq!(
            sens_spec(&[0.9, 0.1], &[true, false], 1.1).unwrap(),
            (0.0, 1.0)
        );
        let (se, sp) = sens_spec(&[0.6, 0.4, 0.6], &[true, true, false], 0.5).unwrap();
        assert_eq!((se, sp), (0.5, 0.0));
    }

    #[test]
    fn logit_values() {
        assert_eq!(logit(0.5, 1e-6), 0.0);
        assert!((logit(0.83, 1e-6) - (0.83f64 / 0.17).ln()).abs() < 1e-15);
        assert!((logit(0.83, 1e-6) - 1.5856).abs() < 1e-4);
        let eps = 1e-6;
        assert_eq!(logit(1.0, eps), ((1.0 - eps) / eps).ln());
        // Antisymmetry inside the clamp range.
        for &p in &[0.01, 0.3, 0.5, 0.77, 0.99] {
            assert!((logit(1.0 - p, eps) + logit(p, eps)).abs() < 1e-12);
        }
    }

    #[test]
    fn response_mean_then_transform() {
        let rec = BTreeMap::from([("mel".to_string(), 0.8), ("ker".to_string(), 0.9)]);
        let ident = ResponseSpec::new(&["mel", "ker"], Transform::Identity);
        assert!((ident.response(&rec).unwrap() - 0.85).abs() < 1e-15);

        let lg = ResponseSpec::new(&["mel", "ker"], Transform::logit_default());
        let expect = (0.85f64 / 0.15).ln();
        assert!((lg.response(&rec).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 1.7346).abs() < 1e-4);

        let single = ResponseSpec::new(&["mel"], Transform::Identity);
        assert_eq!(single.response(&rec).unwrap(), 0.8);

        let missing = ResponseSpec::new(&["nope"], Transform::Identity);
        assert!(missing.response(&rec).is_err());
    }

    #[test]
    fn response_commutes_with_metric_permutation() {
        let rec = BTreeMap::from([
            ("a".to_string(), 0.62),
            ("b".to_string(), 0.97),
            ("c".to_string(), 0.14),
        ]);
        let fwd = ResponseSpec::new(&["a", "b", "c"], Transform::logit_default());
        let rev = ResponseSpec::new(&["c", "a", "b"], Transform::logit_default());
        assert_eq!(
            fwd.response(&rec).unwrap(),
            rev.response(&rec).unwrap()
        );
    }
}
