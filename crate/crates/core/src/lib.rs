//! Algorithmic core for next-year corporate bankruptcy prediction from annual
//! 10-K filings.
//!
//! The crate is `no_std` and only needs an allocator. It covers:
//!
//! - [`corpus`]: item segmentation of raw filings, SIC divisions, corpus statistics
//! - [`linkage`]: matching filings to accounting fundamentals
//! - [`labeling`]: qualification, next-year labels and temporal splits
//! - [`features`]: accounting ratios, imputation/standardization, TF-IDF
//! - [`models`]: logistic regression, MLP and gradient-boosted trees
//! - [`ensemble`]: two-model stacked generalization
//! - [`eval`]: ROC-AUC, average precision, recall@k, CAP ratio and curves
//! - [`llm`]: prompt construction, response parsing and tied-score evaluation
//!
//! File formats, the command line and network transport live in the `bkpred`
//! companion crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod corpus;
pub mod ensemble;
pub mod eval;
pub mod features;
pub mod labeling;
pub mod linkage;
pub mod llm;
pub mod matrix;
pub mod models;
pub mod seed;

pub use chrono::NaiveDate;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
