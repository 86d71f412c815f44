//! Feature construction: accounting ratios, imputation + standardization, and
//! TF-IDF over MD&A text.

mod ratios;
mod scaler;
mod tfidf;

pub use ratios::{compute_ratios, FeatureVector, FEATURE_NAMES, N_FEATURES};
pub use scaler::{fit_scaler, ScalerState, Standardizer};
pub use tfidf::{tokenize, TfidfConfig, TfidfState};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeatureError {
    #[error("transform called before fit")]
    NotFitted,
    #[error("cannot fit on an empty matrix")]
    EmptyFit,
    #[error("expected {expected} columns, got {got}")]
    Width { expected: usize, got: usize },
    #[error("invalid n-gram range ({0}, {1})")]
    NgramRange(usize, usize),
}
