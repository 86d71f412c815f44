//! Two-model stacked generalization.
//!
//! Each base score vector is min-max normalized with bounds fitted on the
//! validation set, then a three-parameter logistic regression
//! `sigmoid(b0 + b1 * s1 + b2 * s2)` is fitted on those normalized scores.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{log_loss, sigmoid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("score vectors and labels differ in length")]
    Length,
    #[error("no scores to fit on")]
    Empty,
    #[error("score at position {0} is not finite")]
    NonFinite(usize),
    #[error("meta fit needs both classes")]
    SingleClass,
    #[error("record {0} was used to train a base model and cannot be used to fit the meta-classifier")]
    Leakage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: f64,
    pub max: f64,
}

impl Normalizer {
    pub fn fit(scores: &[f64]) -> Result<Self, EnsembleError> {
        if scores.is_empty() {
            return Err(EnsembleError::Empty);
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(EnsembleError::NonFinite(i));
        }
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { min, max })
    }

    /// `(s - min) / (max - min)` clamped to `[0, 1]`; 0.5 when the fitted range is empty.
    pub fn apply(&self, s: f64) -> f64 {
        if self.max <= self.min {
            0.5
        } else {
            ((s - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        }
    }
}

pub fn normalize_scores(scores: &[f64], normalizer: &Normalizer) -> Vec<f64> {
    scores.iter().map(|&s| normalizer.apply(s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaModel {
    /// `[b0, b1, b2]`: intercept, then one coefficient per base model.
    pub beta: [f64; 3],
    pub normalizers: [Normalizer; 2],
}

impl MetaModel {
    pub fn predict_one(&self, s1: f64, s2: f64) -> f64 {
        let [b0, b1, b2] = self.beta;
        sigmoid(b0 + b1 * self.normalizers[0].apply(s1) + b2 * self.normalizers[1].apply(s2))
    }
}

pub fn predict_meta(meta: &MetaModel, s1: &[f64], s2: &[f64]) -> Vec<f64> {
    s1.iter().zip(s2).map(|(&a, &b)| meta.predict_one(a, b)).collect()
}

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_RIDGE: f64 = 1e-9;

fn meta_loss(beta: &[f64; 3], rows: &[[f64; 2]], y: &[bool]) -> f64 {
    rows.iter().zip(y).map(|(r, &yi)| log_loss(beta[0] + beta[1] * r[0] + beta[2] * r[1], yi)).sum::<f64>()
        / rows.len() as f64
}

/// Solves a 3x3 system by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).expect("nonempty range");
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..3 {
            let f = a[r][c] / a[c][c];
            for k in c..3 {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 3];
    for c in (0..3).rev() {
        let s: f64 = (c + 1..3).map(|k| a[c][k] * x[k]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    x
}

/// Fits the normalizers on the given (validation) scores, then the
/// unregularized meta-classifier by damped Newton iterations. The tiny ridge
/// and iteration cap keep coefficients finite on separable inputs.
pub fn fit_meta(s1: &[f64], s2: &[f64], y: &[bool]) -> Result<MetaModel, EnsembleError> {
    if s1.len() != y.len() || s2.len() != y.len() {
        return Err(EnsembleError::Length);
    }
    let normalizers = [Normalizer::fit(s1)?, Normalizer::fit(s2)?];
    if let Some(i) = s2.iter().position(|s| !s.is_finite()) {
        return Err(EnsembleError::NonFinite(i));
    }
    let n_pos = y.iter().filter(|&&v| v).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(EnsembleError::SingleClass);
    }
    let rows: Vec<[f64; 2]> = s1.iter().zip(s2).map(|(&a, &b)| [normalizers[0].apply(a), normalizers[1].apply(b)]).collect();
    let n = rows.len() as f64;
    let mut beta = [0.0; 3];
    let mut loss = meta_loss(&beta, &rows, y);
    for _ in 0..NEWTON_MAX_ITER {
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for (r, &yi) in rows.iter().zip(y) {
            let x = [1.0, r[0], r[1]];
            let p = sigmoid(beta[0] + beta[1] * r[0] + beta[2] * r[1]);
            let w = p * (1.0 - p);
            for a in 0..3 {
                g[a] += (p - if yi { 1.0 } else { 0.0 }) * x[a] / n;
                for b in 0..3 {
                    h[a][b] += w * x[a] * x[b] / n;
                }
            }
        }
        for (a, row) in h.iter_mut().enumerate() {
            row[a] += NEWTON_RIDGE;
        }
        let step = solve3(h, g);
        if step.iter().any(|v| !v.is_finite()) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-8 {
            let cand = [beta[0] - t * step[0], beta[1] - t * step[1], beta[2] - t * step[2]];
            let l = meta_loss(&cand, &rows, y);
            if l <= loss {
                beta = cand;
                loss = l;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        let size = t * step.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if !accepted || size < 1e-10 {
            break;
        }
    }
    Ok(MetaModel { beta, normalizers })
}

/// Rejects a meta fit on any record that a base model was trained on.
pub fn check_disjoint<'a, I, J>(meta_ids: I, base_train_ids: J) -> Result<(), EnsembleError>
where
    I: IntoIterator<Item = &'a str>,
    J: IntoIterator<Item = &'a str>,
{
    let base: BTreeSet<&str> = base_train_ids.into_iter().collect();
    for id in meta_ids {
        if base.contains(id) {
            return Err(EnsembleError::Leakage(id.into()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_examples() {
        let n = Normalizer::fit(&[0.0, 5.0, 10.0]).unwrap();
        assert_eq!(normalize_scores(&[0.0, 5.0, 10.0], &n), [0.0, 0.5, 1.0]);
        assert_eq!(n.apply(12.0), 1.0);
        assert_eq!(n.apply(-1.0), 0.0);
        let c = Normalizer::fit(&[3.0; 4]).unwrap();
        assert_eq!(normalize_scores(&[1.0, 3.0, 9.0], &c), [0.5; 3]);
    }

    #[test]
    fn hand_prediction() {
        let id = Normalizer { min: 0.0, max: 1.0 };
        let m = MetaModel { beta: [-1.0, 2.0, 1.0], normalizers: [id, id] };
        assert!((m.predict_one(0.5, 0.25) - 0.562_176_500_885_798_7).abs() < 1e-12);
        let z = MetaModel { beta: [0.0; 3], normalizers: [id, id] };
        assert_eq!(predict_meta(&z, &[0.1, 0.9], &[0.3, 0.2]), [0.5, 0.5]);
    }

    #[test]
    fn planted_base_dominates() {
        let y: Vec<bool> = (0..200).map(|i| i % 7 == 0).collect();
        let s1: Vec<f64> = y.iter().enumerate().map(|(i, &v)| (if v { 0.55 } else { 0.45 }) + (i % 13) as f64 * 0.01).collect();
        let s2: Vec<f64> = (0..200).map(|i| ((i * 7919) % 211) as f64).collect();
        let m = fit_meta(&s1, &s2, &y).unwrap();
        assert!(m.beta.iter().all(|b| b.is_finite()));
        assert!(m.beta[1] > 10.0 * m.beta[2].abs());
        let swapped = fit_meta(&s2, &s1, &y).unwrap();
        assert!((swapped.beta[1] - m.beta[2]).abs() < 1e-6 && (swapped.beta[2] - m.beta[1]).abs() < 1e-6);
        assert_eq!(fit_meta(&s1, &s2, &[false; 200]), Err(EnsembleError::SingleClass));
    }

    #[test]
    fn leakage_guard() {
        assert!(check_disjoint(["a", "b"], ["c"]).is_ok());
        assert_eq!(check_disjoint(["a", "b"], ["b"]), Err(EnsembleError::Leakage("b".into())));
    }
}
