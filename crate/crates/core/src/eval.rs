//! Rank-based evaluation for imbalanced binary classification.
//!
//! Tie conventions:
//! - ROC-AUC counts a tied positive/negative pair as half a win.
//! - Curves place one point per group of tied scores, so the CAP and ROC
//!   curves interpolate linearly through ties. With trapezoidal integration
//!   this makes the CAP accuracy ratio equal `2 * AUC - 1`.
//! - Average precision and recall@k walk a stable descending sort, so tied
//!   scores keep their input order. [`MetricsReport::ties_at_k`] flags a tie
//!   group straddling the k boundary.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),
    #[error("scores and labels differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("score at position {0} is not finite")]
    NonFinite(usize),
    #[error("k = {k} outside 1..={n}")]
    InvalidK { k: usize, n: usize },
}

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::Length(scores.len(), labels.len()));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFinite(i));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    Ok((n_pos, labels.len() - n_pos))
}

/// Indices sorted by descending score; ties keep input order.
pub fn ranked_order(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// `(positives, negatives)` per group of equal scores, highest score first.
fn tie_groups(scores: &[f64], labels: &[bool]) -> Vec<(u64, u64)> {
    let order = ranked_order(scores);
    let mut groups: Vec<(u64, u64)> = Vec::new();
    let mut prev: Option<f64> = None;
    for i in order {
        if prev != Some(scores[i]) {
            groups.push((0, 0));
            prev = Some(scores[i]);
        }
        let g = groups.last_mut().expect("group pushed above");
        if labels[i] {
            g.0 += 1;
        } else {
            g.1 += 1;
        }
    }
    groups
}

/// Twice the Mann-Whitney count: `2 * wins + ties` over positive/negative pairs.
fn doubled_pair_wins(groups: &[(u64, u64)]) -> u128 {
    // groups are in descending score order, so every negative in a later group
    // loses to the positives of the current one
    let total_neg: u64 = groups.iter().map(|g| g.1).sum();
    let mut neg_seen = 0u64;
    let mut acc = 0u128;
    for &(p, n) in groups {
        let below = total_neg - neg_seen - n;
        acc += 2 * u128::from(p) * u128::from(below) + u128::from(p) * u128::from(n);
        neg_seen += n;
    }
    acc
}

pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    let (n_pos, n_neg) = check(scores, labels)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::UndefinedMetric("ROC-AUC needs both classes"));
    }
    let wins2 = doubled_pair_wins(&tie_groups(scores, labels));
    Ok(wins2 as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// Non-interpolated average precision: mean of the precision at the rank of
/// each positive.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    let (n_pos, _) = check(scores, labels)?;
    if n_pos == 0 {
        return Err(EvalError::UndefinedMetric("AP needs a positive"));
    }
    let mut tp = 0usize;
    let mut sum = 0.0;
    for (rank, i) in ranked_order(scores).into_iter().enumerate() {
        if labels[i] {
            tp += 1;
            sum += tp as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / n_pos as f64)
}

/// Share of all positives within the `k` highest ranked rows.
pub fn recall_at_k(scores: &[f64], labels: &[bool], k: usize) -> Result<f64, EvalError> {
    let (n_pos, _) = check(scores, labels)?;
    if k == 0 || k > labels.len() {
        return Err(EvalError::InvalidK { k, n: labels.len() });
    }
    if n_pos == 0 {
        return Err(EvalError::UndefinedMetric("recall needs a positive"));
    }
    let hits = ranked_order(scores).into_iter().take(k).filter(|&i| labels[i]).count();
    Ok(hits as f64 / n_pos as f64)
}

/// True when the scores at ranks `k` and `k + 1` are equal.
pub fn ties_cross_k(scores: &[f64], k: usize) -> bool {
    if k == 0 || k >= scores.len() {
        return false;
    }
    let order = ranked_order(scores);
    scores[order[k - 1]] == scores[order[k]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    /// `(recall, precision)`, starting at `(0, 1)`.
    pub pr: Vec<CurvePoint>,
    /// `(false positive rate, true positive rate)` from `(0, 0)` to `(1, 1)`.
    pub roc: Vec<CurvePoint>,
    /// `(fraction of observations, recall)` from `(0, 0)` to `(1, 1)`.
    pub cap: Vec<CurvePoint>,
}

pub fn curves(scores: &[f64], labels: &[bool]) -> Result<Curves, EvalError> {
    let (n_pos, n_neg) = check(scores, labels)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::UndefinedMetric("curves need both classes"));
    }
    let (p, q, n) = (n_pos as f64, n_neg as f64, labels.len() as f64);
    let origin = CurvePoint { x: 0.0, y: 0.0 };
    let mut pr = alloc::vec![CurvePoint { x: 0.0, y: 1.0 }];
    let mut roc = alloc::vec![origin];
    let mut cap = alloc::vec![origin];
    let (mut tp, mut fp) = (0u64, 0u64);
    for (gp, gn) in tie_groups(scores, labels) {
        tp += gp;
        fp += gn;
        let (tp, fp) = (tp as f64, fp as f64);
        pr.push(CurvePoint { x: tp / p, y: tp / (tp + fp) });
        roc.push(CurvePoint { x: fp / q, y: tp / p });
        cap.push(CurvePoint { x: (tp + fp) / n, y: tp / p });
    }
    Ok(Curves { pr, roc, cap })
}

/// Trapezoidal area under a polyline.
pub fn trapezoid(points: &[CurvePoint]) -> f64 {
    points.windows(2).map(|w| (w[1].x - w[0].x) * (w[1].y + w[0].y) / 2.0).sum()
}

/// Accuracy ratio of the CAP curve: area between the model curve and the
/// diagonal over the same area for a perfect ranking.
pub fn cap_ratio(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    let c = curves(scores, labels)?;
    let prevalence = labels.iter().filter(|&&l| l).count() as f64 / labels.len() as f64;
    Ok(cap_ratio_from_curve(&c.cap, prevalence))
}

pub fn cap_ratio_from_curve(cap: &[CurvePoint], prevalence: f64) -> f64 {
    // the perfect CAP rises to (prevalence, 1) and stays flat, so its area
    // over the diagonal is (1 - prevalence) / 2
    (trapezoid(cap) - 0.5) / ((1.0 - prevalence) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub roc_auc: f64,
    pub ap: f64,
    /// Requested k; recall is computed at `min(k, n)`.
    pub k: usize,
    pub recall_at_k: f64,
    pub cap_ratio: f64,
    pub curves: Curves,
    pub n: usize,
    pub n_pos: usize,
    pub ties_at_k: bool,
}

pub const DEFAULT_K: usize = 100;

pub fn evaluate(scores: &[f64], labels: &[bool], k: usize) -> Result<MetricsReport, EvalError> {
    let (n_pos, _) = check(scores, labels)?;
    let n = labels.len();
    let k_eff = k.min(n);
    let curves = curves(scores, labels)?;
    Ok(MetricsReport {
        roc_auc: roc_auc(scores, labels)?,
        ap: average_precision(scores, labels)?,
        k,
        recall_at_k: recall_at_k(scores, labels, k_eff)?,
        cap_ratio: cap_ratio_from_curve(&curves.cap, n_pos as f64 / n as f64),
        curves,
        n,
        n_pos,
        ties_at_k: ties_cross_k(scores, k_eff),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: [f64; 4] = [0.9, 0.8, 0.7, 0.6];
    const L: [bool; 4] = [true, false, true, false];

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&S, &[true, true, false, false]), Ok(1.0));
        assert_eq!(roc_auc(&S, &L), Ok(0.75));
        assert_eq!(roc_auc(&[0.3; 4], &L), Ok(0.5));
        assert!(matches!(roc_auc(&S, &[true; 4]), Err(EvalError::UndefinedMetric(_))));
        assert!(matches!(roc_auc(&[f64::NAN, 0.0], &[true, false]), Err(EvalError::NonFinite(0))));
    }

    #[test]
    fn ap_examples() {
        let ap = average_precision(&S, &L).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert_eq!(average_precision(&S, &[true, true, false, false]), Ok(1.0));
        assert_eq!(average_precision(&S, &[false, false, false, true]), Ok(0.25));
        assert!(average_precision(&S, &[false; 4]).is_err());
    }

    #[test]
    fn recall_examples() {
        assert_eq!(recall_at_k(&S, &L, 4), Ok(1.0));
        assert_eq!(recall_at_k(&S, &L, 1), Ok(0.5));
        assert_eq!(recall_at_k(&S, &[false, true, false, true], 1), Ok(0.0));
        assert!(recall_at_k(&S, &L, 5).is_err());
        assert!(recall_at_k(&S, &L, 0).is_err());
    }

    #[test]
    fn cap_examples() {
        assert!((cap_ratio(&S, &[true, true, false, false]).unwrap() - 1.0).abs() < 1e-12);
        assert!((cap_ratio(&S, &L).unwrap() - 0.5).abs() < 1e-12);
        assert!(cap_ratio(&[0.1; 4], &L).unwrap().abs() < 1e-12);
    }

    #[test]
    fn curve_anchors() {
        let c = curves(&S, &L).unwrap();
        assert_eq!(c.roc.first(), Some(&CurvePoint { x: 0.0, y: 0.0 }));
        assert_eq!(c.roc.last(), Some(&CurvePoint { x: 1.0, y: 1.0 }));
        assert_eq!(c.cap.last(), Some(&CurvePoint { x: 1.0, y: 1.0 }));
        assert_eq!(c.pr.first(), Some(&CurvePoint { x: 0.0, y: 1.0 }));
        assert_eq!(c.pr.last(), Some(&CurvePoint { x: 1.0, y: 0.5 }));
        assert!((trapezoid(&c.roc) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn tie_flag() {
        assert!(ties_cross_k(&[0.9, 0.5, 0.5, 0.1], 2));
        assert!(!ties_cross_k(&[0.9, 0.5, 0.5, 0.1], 3));
        let r = evaluate(&S, &L, 100).unwrap();
        assert_eq!(r.recall_at_k, 1.0);
        assert!(!r.ties_at_k);
    }
}
