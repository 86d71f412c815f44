use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::matrix::DenseMatrix;

/// Imbalance handling and seeding for one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub seed: u64,
    /// Target positives-per-negative ratio after oversampling.
    pub oversample_ratio: Option<f64>,
    /// Weight samples inversely to class frequency.
    pub class_weighting: bool,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if let Some(r) = self.oversample_ratio {
            if !(r > 0.0 && r <= 1.0) {
                return Err(ModelError::Config("oversample_ratio must lie in (0, 1]"));
            }
            if self.class_weighting {
                return Err(ModelError::Config("oversampling and class weighting are mutually exclusive"));
            }
        }
        Ok(())
    }
}

/// Row indices of the oversampled set: every input row in order, followed by
/// positives drawn with replacement until there are `round(ratio * n_neg)`
/// positives. Positives are never removed when the input already exceeds the
/// target.
pub fn oversample_indices(y: &[bool], ratio: f64, seed: u64) -> Result<Vec<usize>, ModelError> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(ModelError::Config("oversample ratio must lie in (0, 1]"));
    }
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i]).collect();
    let n_neg = y.len() - pos.len();
    if pos.is_empty() {
        return Err(ModelError::NoMinoritySamples);
    }
    if n_neg == 0 {
        return Err(ModelError::SingleClass);
    }
    let target = libm::round(ratio * n_neg as f64) as usize;
    let mut idx: Vec<usize> = (0..y.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in pos.len()..target.max(pos.len()) {
        idx.push(pos[rng.gen_range(0..pos.len())]);
    }
    Ok(idx)
}

pub fn oversample(x: &DenseMatrix, y: &[bool], ratio: f64, seed: u64) -> Result<(DenseMatrix, Vec<bool>), ModelError> {
    if x.rows() != y.len() {
        return Err(ModelError::Length(x.rows(), y.len()));
    }
    let idx = oversample_indices(y, ratio, seed)?;
    Ok((x.select_rows(&idx), idx.iter().map(|&i| y[i]).collect()))
}

/// `n / (2 * n_c)` for each sample's class `c`.
pub fn class_weights(y: &[bool]) -> Result<Vec<f64>, ModelError> {
    let n = y.len() as f64;
    let n_pos = y.iter().filter(|&&v| v).count() as f64;
    let n_neg = n - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(ModelError::SingleClass);
    }
    let (wp, wn) = (n / (2.0 * n_pos), n / (2.0 * n_neg));
    Ok(y.iter().map(|&v| if v { wp } else { wn }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn oversample_counts() {
        let mut y = vec![false; 102];
        y[3] = true;
        y[50] = true;
        let idx = oversample_indices(&y, 0.5, 1).unwrap();
        let n_pos = idx.iter().filter(|&&i| y[i]).count();
        assert_eq!(n_pos, 50);
        assert_eq!(idx.len(), 150);
        assert!(idx[..102].iter().copied().eq(0..102));
        assert!(idx[102..].iter().all(|&i| i == 3 || i == 50));
        assert_eq!(idx, oversample_indices(&y, 0.5, 1).unwrap());
        assert_ne!(idx, oversample_indices(&y, 0.5, 2).unwrap());
    }

    #[test]
    fn oversample_fixed_point_and_errors() {
        let y = [true, false, false, false];
        assert_eq!(oversample_indices(&y, 1.0 / 3.0, 0).unwrap(), [0, 1, 2, 3]);
        assert_eq!(oversample_indices(&[false, false], 0.5, 0), Err(ModelError::NoMinoritySamples));
        assert!(oversample_indices(&y, 0.0, 0).is_err());
        assert!(oversample_indices(&y, 1.5, 0).is_err());
    }

    #[test]
    fn class_weight_formula() {
        let w = class_weights(&[true, false, false, false]).unwrap();
        assert_eq!(w[0], 2.0);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 4.0).abs() < 1e-12);
        assert_eq!(class_weights(&[true, false]).unwrap(), [1.0, 1.0]);
        assert_eq!(class_weights(&[true, true]), Err(ModelError::SingleClass));
    }

    #[test]
    fn config_exclusivity() {
        let c = TrainConfig { seed: 0, oversample_ratio: Some(0.5), class_weighting: true };
        assert!(c.validate().is_err());
        assert!(TrainConfig { class_weighting: false, ..c }.validate().is_ok());
    }
}
