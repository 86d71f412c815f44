//! Trainable scorers and their training utilities.
//!
//! All three families minimize the sample-weighted mean logistic loss
//! `sum_i s_i * loss_i / sum_i s_i`. Training is deterministic given its
//! configuration and seed.

mod gbt;
mod logreg;
mod mlp;
mod sampling;
mod search;

pub use gbt::{train_gbt, GbtConfig, GbtModel, Node, Tree};
pub use logreg::{logreg_objective, smooth_loss_grad, train_logreg, LogRegConfig, LogRegModel, Penalty, StepSize};
pub use mlp::{train_mlp, Layer, MlpConfig, MlpModel};
pub use sampling::{class_weights, oversample, oversample_indices, TrainConfig};
pub use search::{grid_search, SearchResult};

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::EvalError;
use crate::matrix::{DenseMatrix, Design};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("{0} rows in X but {1} labels")]
    Length(usize, usize),
    #[error("no minority (positive) samples")]
    NoMinoritySamples,
    #[error("both classes are required")]
    SingleClass,
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("empty hyperparameter grid")]
    EmptyGrid,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Logistic function, branch-stable for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + libm::log1p(libm::exp(-libm::fabs(z)))
}

/// Logistic loss of logit `z` for label `y`.
pub fn log_loss(z: f64, y: bool) -> f64 {
    softplus(z) - if y { z } else { 0.0 }
}

/// Weighted mean logistic loss of probability scores.
pub fn mean_log_loss(probs: &[f64], y: &[bool], weights: Option<&[f64]>) -> f64 {
    let eps = 1e-15;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, (&p, &yi)) in probs.iter().zip(y).enumerate() {
        let s = weights.map_or(1.0, |w| w[i]);
        let p = p.clamp(eps, 1.0 - eps);
        num -= s * if yi { libm::log(p) } else { libm::log(1.0 - p) };
        den += s;
    }
    num / den
}

/// Anything that maps a design matrix to probabilities in `[0, 1]`.
pub trait Scorer<D: ?Sized> {
    fn score(&self, x: &D) -> Vec<f64>;
}

/// Versioned on-disk form of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SavedModel {
    Logreg(LogRegModel),
    Mlp(MlpModel),
    Gbt(GbtModel),
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

impl SavedModel {
    pub fn family(&self) -> &'static str {
        match self {
            Self::Logreg(_) => "logreg",
            Self::Mlp(_) => "mlp",
            Self::Gbt(_) => "gbt",
        }
    }

    /// Scores a dense matrix. GBT reads `NaN` as missing; the other
    /// families expect imputed, standardized input.
    pub fn score_dense(&self, x: &DenseMatrix) -> Vec<f64> {
        match self {
            Self::Logreg(m) => m.score(x),
            Self::Mlp(m) => m.score(x),
            Self::Gbt(m) => m.score(x),
        }
    }
}

pub(crate) fn check_xy<D: Design + ?Sized>(x: &D, y: &[bool], weights: Option<&[f64]>) -> Result<(), ModelError> {
    if x.n_rows() != y.len() {
        return Err(ModelError::Length(x.n_rows(), y.len()));
    }
    if let Some(w) = weights {
        if w.len() != y.len() {
            return Err(ModelError::Length(w.len(), y.len()));
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ModelError::NonFinite);
        }
    }
    Ok(())
}

/// Log-odds of the weighted positive rate, clamped away from 0 and 1.
pub(crate) fn base_log_odds(y: &[bool], weights: Option<&[f64]>) -> f64 {
    let (mut pos, mut tot) = (0.0, 0.0);
    for (i, &yi) in y.iter().enumerate() {
        let s = weights.map_or(1.0, |w| w[i]);
        tot += s;
        if yi {
            pos += s;
        }
    }
    let p = if tot > 0.0 { (pos / tot).clamp(1e-6, 1.0 - 1e-6) } else { 0.5 };
    libm::log(p / (1.0 - p))
}
