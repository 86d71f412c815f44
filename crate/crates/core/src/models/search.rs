use alloc::vec::Vec;

use super::ModelError;
use crate::eval::roc_auc;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult<C, M> {
    pub best_index: usize,
    pub best_config: C,
    pub best_model: M,
    pub val_auc: f64,
    /// Validation ROC-AUC of every grid point, in grid order.
    pub val_aucs: Vec<f64>,
}

/// Fits one model per grid point and keeps the one with the highest
/// validation ROC-AUC. Equal AUCs keep the earlier grid point.
pub fn grid_search<C, M, F, S>(grid: &[C], mut fit: F, mut score_val: S, y_val: &[bool]) -> Result<SearchResult<C, M>, ModelError>
where
    C: Clone,
    F: FnMut(&C) -> Result<M, ModelError>,
    S: FnMut(&M) -> Vec<f64>,
{
    if grid.is_empty() {
        return Err(ModelError::EmptyGrid);
    }
    let mut best: Option<(usize, M, f64)> = None;
    let mut val_aucs = Vec::with_capacity(grid.len());
    for (i, cfg) in grid.iter().enumerate() {
        let model = fit(cfg)?;
        let auc = roc_auc(&score_val(&model), y_val)?;
        val_aucs.push(auc);
        if best.as_ref().map_or(true, |b| auc > b.2) {
            best = Some((i, model, auc));
        }
    }
    let (best_index, best_model, val_auc) = best.expect("grid is nonempty");
    Ok(SearchResult { best_index, best_config: grid[best_index].clone(), best_model, val_auc, val_aucs })
}
