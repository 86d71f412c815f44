use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::matrix::DenseMatrix;

/// Per-column statistics fitted on training rows.
///
/// Missing entries are imputed with the column mean over present entries
/// (0 for an all-missing column). `mean`/`std` are the population statistics
/// of the imputed column, so imputed training data standardizes to exactly
/// mean 0 and, unless degenerate, variance 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerState {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub impute: Vec<f64>,
}

pub fn fit_scaler<R: AsRef<[Option<f64>]>>(rows: &[R]) -> Result<ScalerState, FeatureError> {
    let first = rows.first().ok_or(FeatureError::EmptyFit)?;
    let width = first.as_ref().len();
    let mut sum = alloc::vec![0.0; width];
    let mut count = alloc::vec![0usize; width];
    for r in rows {
        let r = r.as_ref();
        if r.len() != width {
            return Err(FeatureError::Width { expected: width, got: r.len() });
        }
        for (j, v) in r.iter().enumerate() {
            if let Some(v) = v.filter(|v| v.is_finite()) {
                sum[j] += v;
                count[j] += 1;
            }
        }
    }
    let impute: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect();
    let n = rows.len() as f64;
    let mut ss = alloc::vec![0.0; width];
    for r in rows {
        for (j, v) in r.as_ref().iter().enumerate() {
            let x = v.filter(|v| v.is_finite()).unwrap_or(impute[j]);
            ss[j] += (x - impute[j]) * (x - impute[j]);
        }
    }
    let std = ss.iter().map(|s| libm::sqrt(s / n)).collect();
    Ok(ScalerState { mean: impute.clone(), std, impute })
}

impl ScalerState {
    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[Option<f64>], out: &mut [f64]) -> Result<(), FeatureError> {
        if row.len() != self.width() {
            return Err(FeatureError::Width { expected: self.width(), got: row.len() });
        }
        for (j, (v, o)) in row.iter().zip(out.iter_mut()).enumerate() {
            let x = v.filter(|v| v.is_finite()).unwrap_or(self.impute[j]);
            *o = if self.std[j] > 0.0 { (x - self.mean[j]) / self.std[j] } else { 0.0 };
        }
        Ok(())
    }

    pub fn transform<R: AsRef<[Option<f64>]>>(&self, rows: &[R]) -> Result<DenseMatrix, FeatureError> {
        let mut m = DenseMatrix::zeros(rows.len(), self.width());
        for (i, r) in rows.iter().enumerate() {
            self.transform_row(r.as_ref(), m.row_mut(i))?;
        }
        Ok(m)
    }
}

/// Fit-then-transform wrapper that refuses to transform before fitting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    state: Option<ScalerState>,
}

impl Standardizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fit<R: AsRef<[Option<f64>]>>(&mut self, rows: &[R]) -> Result<&ScalerState, FeatureError> {
        Ok(self.state.insert(fit_scaler(rows)?))
    }

    pub fn transform<R: AsRef<[Option<f64>]>>(&self, rows: &[R]) -> Result<DenseMatrix, FeatureError> {
        self.state.as_ref().ok_or(FeatureError::NotFitted)?.transform(rows)
    }

    pub fn state(&self) -> Option<&ScalerState> {
        self.state.as_ref()
    }
}
