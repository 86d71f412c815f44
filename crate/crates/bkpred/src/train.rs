//! Fitting, tuning and scoring the four model families on a [`Dataset`].
//!
//! Numerical families read the 28 ratios: logistic regression and the MLP
//! after mean imputation and standardization fitted on the training rows,
//! GBT on the raw ratios with missing values left to the trees. The text
//! family is TF-IDF over MD&A followed by L1 logistic regression.

use bkpred_core::features::{fit_scaler, ScalerState, TfidfConfig, TfidfState, N_FEATURES};
use bkpred_core::matrix::DenseMatrix;
use bkpred_core::models::{
    class_weights, grid_search, oversample_indices, train_gbt, train_logreg, train_mlp, GbtConfig, LogRegConfig,
    MlpConfig, ModelError, Penalty, SavedModel, Scorer, MODEL_FORMAT_VERSION,
};
use bkpred_core::seed::derive_seed;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Logreg,
    Mlp,
    Gbt,
    Tfidf,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Logreg => "logreg",
            Family::Mlp => "mlp",
            Family::Gbt => "gbt",
            Family::Tfidf => "tfidf",
        }
    }
}

/// One point of a hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelSpec {
    Logreg {
        lambda: f64,
        oversample_ratio: Option<f64>,
    },
    Mlp {
        hidden: Vec<usize>,
        learning_rate: f64,
        lambda: f64,
        epochs: usize,
        batch_size: usize,
        oversample_ratio: Option<f64>,
    },
    Gbt {
        n_trees: usize,
        eta: f64,
        subsample: f64,
        max_depth: usize,
        lambda_leaf: f64,
        min_child_weight: f64,
        oversample_ratio: Option<f64>,
    },
    Tfidf {
        ngram_range: (usize, usize),
        min_df: u64,
        lambda: f64,
        class_weighting: bool,
    },
}

impl ModelSpec {
    pub fn family(&self) -> Family {
        match self {
            ModelSpec::Logreg { .. } => Family::Logreg,
            ModelSpec::Mlp { .. } => Family::Mlp,
            ModelSpec::Gbt { .. } => Family::Gbt,
            ModelSpec::Tfidf { .. } => Family::Tfidf,
        }
    }

    fn oversample_ratio(&self) -> Option<f64> {
        match *self {
            ModelSpec::Logreg { oversample_ratio, .. }
            | ModelSpec::Mlp { oversample_ratio, .. }
            | ModelSpec::Gbt { oversample_ratio, .. } => oversample_ratio,
            ModelSpec::Tfidf { .. } => None,
        }
    }
}

/// A trained model with everything needed to score new rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub seed: u64,
    pub scaler: Option<ScalerState>,
    pub tfidf: Option<TfidfState>,
    pub model: SavedModel,
    /// Records the model was fitted on, for the ensemble leakage check.
    pub training_ids: Vec<String>,
}

fn raw_matrix(ds: &Dataset, rows: &[usize]) -> DenseMatrix {
    let data: Vec<f64> = rows.iter().flat_map(|&i| ds.ratios[i].to_nan_row()).collect();
    DenseMatrix::from_vec(rows.len(), N_FEATURES, data)
}

fn scaled_matrix(scaler: &ScalerState, ds: &Dataset, rows: &[usize]) -> Result<DenseMatrix> {
    let sel: Vec<_> = rows.iter().map(|&i| ds.ratios[i]).collect();
    Ok(scaler.transform(&sel)?)
}

fn docs<'a>(ds: &'a Dataset, rows: &[usize]) -> Vec<&'a str> {
    rows.iter().map(|&i| ds.texts[i].as_str()).collect()
}

/// Fits `spec` on `rows` of `ds`. Oversampling, initialization and row
/// subsampling draw from seeds derived from `seed`.
pub fn fit(spec: &ModelSpec, ds: &Dataset, rows: &[usize], seed: u64) -> Result<ModelBundle> {
    let y = ds.labels_of(rows);
    let mut scaler = None;
    let mut tfidf = None;
    let model = match spec {
        ModelSpec::Tfidf { ngram_range, min_df, lambda, class_weighting } => {
            let d = docs(ds, rows);
            let state = TfidfState::fit(&d, &TfidfConfig { ngram_range: *ngram_range, min_df: *min_df })?;
            let x = state.transform(&d);
            let w = class_weighting.then(|| class_weights(&y)).transpose()?;
            let cfg = LogRegConfig { penalty: Penalty::L1, lambda: *lambda, ..LogRegConfig::default() };
            tfidf = Some(state);
            SavedModel::Logreg(train_logreg(&x, &y, w.as_deref(), &cfg)?)
        }
        _ => {
            let x = if let ModelSpec::Gbt { .. } = spec {
                raw_matrix(ds, rows)
            } else {
                let sel: Vec<_> = rows.iter().map(|&i| ds.ratios[i]).collect();
                let st = fit_scaler(&sel)?;
                let x = st.transform(&sel)?;
                scaler = Some(st);
                x
            };
            let (x, y) = match spec.oversample_ratio() {
                Some(r) => {
                    let idx = oversample_indices(&y, r, derive_seed(seed, "oversample"))?;
                    (x.select_rows(&idx), idx.iter().map(|&i| y[i]).collect())
                }
                None => (x, y),
            };
            fit_dense(spec, &x, &y, seed)?
        }
    };
    Ok(ModelBundle {
        format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        seed,
        scaler,
        tfidf,
        model,
        training_ids: ds.ids_of(rows),
    })
}

fn fit_dense(spec: &ModelSpec, x: &DenseMatrix, y: &[bool], seed: u64) -> Result<SavedModel, ModelError> {
    Ok(match spec {
        ModelSpec::Logreg { lambda, .. } => {
            let cfg = LogRegConfig { penalty: Penalty::L2, lambda: *lambda, ..LogRegConfig::default() };
            SavedModel::Logreg(train_logreg(x, y, None, &cfg)?)
        }
        ModelSpec::Mlp { hidden, learning_rate, lambda, epochs, batch_size, .. } => {
            let cfg = MlpConfig {
                hidden: hidden.clone(),
                learning_rate: *learning_rate,
                lambda: *lambda,
                epochs: *epochs,
                batch_size: *batch_size,
                seed: derive_seed(seed, "mlp"),
            };
            SavedModel::Mlp(train_mlp(x, y, None, &cfg)?)
        }
        ModelSpec::Gbt { n_trees, eta, subsample, max_depth, lambda_leaf, min_child_weight, .. } => {
            let cfg = GbtConfig {
                n_trees: *n_trees,
                eta: *eta,
                subsample: *subsample,
                max_depth: *max_depth,
                lambda_leaf: *lambda_leaf,
                min_child_weight: *min_child_weight,
                seed: derive_seed(seed, "gbt"),
            };
            SavedModel::Gbt(train_gbt(x, y, None, &cfg)?)
        }
        ModelSpec::Tfidf { .. } => unreachable!("text models are fitted on sparse input"),
    })
}

impl ModelBundle {
    pub fn score(&self, ds: &Dataset, rows: &[usize]) -> Result<Vec<f64>> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!("unsupported model format version {}", self.format_version)));
        }
        match (&self.spec, &self.model, &self.tfidf, &self.scaler) {
            (ModelSpec::Tfidf { .. }, SavedModel::Logreg(m), Some(state), _) => {
                Ok(m.score(&state.transform(&docs(ds, rows))))
            }
            (ModelSpec::Gbt { .. }, SavedModel::Gbt(m), _, _) => Ok(m.score(&raw_matrix(ds, rows))),
            (ModelSpec::Logreg { .. } | ModelSpec::Mlp { .. }, m, _, Some(st)) => {
                Ok(m.score_dense(&scaled_matrix(st, ds, rows)?))
            }
            _ => Err(Error::Data("model file is inconsistent with its spec".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub family: Family,
    pub grid: Vec<ModelSpec>,
    pub val_aucs: Vec<f64>,
    pub best_index: usize,
    pub best: ModelSpec,
    pub best_val_auc: f64,
}

/// Fits every grid point on `train` and keeps the one with the highest
/// validation ROC-AUC; earlier points win ties.
pub fn tune(grid: &[ModelSpec], ds: &Dataset, train: &[usize], val: &[usize], seed: u64) -> Result<(TuneResult, ModelBundle)> {
    let family = grid.first().map(ModelSpec::family).ok_or_else(|| Error::Config("empty grid".into()))?;
    let y_val = ds.labels_of(val);
    let mut failure: Option<Error> = None;
    let mut score_failure: Option<Error> = None;
    let res = grid_search(
        grid,
        |spec| {
            fit(spec, ds, train, seed).map_err(|e| {
                failure.get_or_insert(e);
                ModelError::Config("grid point failed to fit")
            })
        },
        |m: &ModelBundle| {
            m.score(ds, val).unwrap_or_else(|e| {
                score_failure.get_or_insert(e);
                vec![0.0; val.len()]
            })
        },
        &y_val,
    );
    if let Some(e) = failure.or(score_failure) {
        return Err(e);
    }
    let r = res?;
    let best = grid[r.best_index].clone();
    Ok((
        TuneResult { family, grid: grid.to_vec(), val_aucs: r.val_aucs, best_index: r.best_index, best, best_val_auc: r.val_auc },
        r.best_model,
    ))
}
