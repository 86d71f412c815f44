use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_xy, log_loss, sigmoid, ModelError, Scorer};
use crate::matrix::Design;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Penalty {
    /// `lambda * ||w||_1`, applied through soft-thresholding.
    L1,
    /// `lambda / 2 * ||w||^2`.
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepSize {
    Fixed(f64),
    /// Sufficient-decrease backtracking. The accepted step grows by 25% after
    /// every iteration and halves on each rejection.
    Backtracking { initial: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    pub penalty: Penalty,
    pub lambda: f64,
    pub step: StepSize,
    pub max_epochs: usize,
    /// Stop once the norm of the (proximal) gradient mapping drops below this.
    pub tol: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            penalty: Penalty::L2,
            lambda: 1e-3,
            step: StepSize::Backtracking { initial: 1.0 },
            max_epochs: 1000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub penalty: Penalty,
    pub lambda: f64,
}

impl LogRegModel {
    pub fn decision<D: Design + ?Sized>(&self, x: &D) -> Vec<f64> {
        (0..x.n_rows()).map(|i| x.row_dot(i, &self.weights) + self.bias).collect()
    }
}

impl<D: Design + ?Sized> Scorer<D> for LogRegModel {
    fn score(&self, x: &D) -> Vec<f64> {
        self.decision(x).into_iter().map(sigmoid).collect()
    }
}

/// Weighted mean logistic loss and its gradient `(loss, d/dw, d/db)`.
pub fn smooth_loss_grad<D: Design + ?Sized>(
    x: &D,
    y: &[bool],
    weights: Option<&[f64]>,
    w: &[f64],
    b: f64,
) -> (f64, Vec<f64>, f64) {
    let total: f64 = weights.map_or(y.len() as f64, |s| s.iter().sum());
    let mut grad = alloc::vec![0.0; w.len()];
    let mut gb = 0.0;
    let mut loss = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let s = weights.map_or(1.0, |s| s[i]) / total;
        if s == 0.0 {
            continue;
        }
        let z = x.row_dot(i, w) + b;
        loss += s * log_loss(z, yi);
        let r = s * (sigmoid(z) - if yi { 1.0 } else { 0.0 });
        x.row_axpy(i, r, &mut grad);
        gb += r;
    }
    (loss, grad, gb)
}

fn penalty_value(penalty: Penalty, lambda: f64, w: &[f64]) -> f64 {
    match penalty {
        Penalty::L1 => lambda * w.iter().map(|v| v.abs()).sum::<f64>(),
        Penalty::L2 => 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>(),
    }
}

/// Full objective: weighted mean loss plus penalty (bias unpenalized).
pub fn logreg_objective<D: Design + ?Sized>(
    x: &D,
    y: &[bool],
    weights: Option<&[f64]>,
    w: &[f64],
    b: f64,
    penalty: Penalty,
    lambda: f64,
) -> f64 {
    smooth_loss_grad(x, y, weights, w, b).0 + penalty_value(penalty, lambda, w)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Smooth part including the L2 term, with its gradient.
fn smooth_part<D: Design + ?Sized>(
    x: &D,
    y: &[bool],
    weights: Option<&[f64]>,
    w: &[f64],
    b: f64,
    cfg: &LogRegConfig,
) -> (f64, Vec<f64>, f64) {
    let (mut f, mut g, gb) = smooth_loss_grad(x, y, weights, w, b);
    if cfg.penalty == Penalty::L2 {
        f += penalty_value(Penalty::L2, cfg.lambda, w);
        for (gj, wj) in g.iter_mut().zip(w) {
            *gj += cfg.lambda * wj;
        }
    }
    (f, g, gb)
}

/// Full-batch proximal gradient descent from the zero vector.
pub fn train_logreg<D: Design + ?Sized>(
    x: &D,
    y: &[bool],
    weights: Option<&[f64]>,
    cfg: &LogRegConfig,
) -> Result<LogRegModel, ModelError> {
    check_xy(x, y, weights)?;
    if !x.all_finite() {
        return Err(ModelError::NonFinite);
    }
    if !(cfg.lambda >= 0.0 && cfg.lambda.is_finite()) {
        return Err(ModelError::Config("lambda must be finite and nonnegative"));
    }
    let (mut t, backtrack) = match cfg.step {
        StepSize::Fixed(lr) => (lr, false),
        StepSize::Backtracking { initial } => (initial, true),
    };
    if !(t > 0.0 && t.is_finite()) {
        return Err(ModelError::Config("step size must be positive"));
    }

    let d = x.n_cols();
    let mut w = alloc::vec![0.0; d];
    let mut b = 0.0;
    let (mut f, mut g, mut gb) = smooth_part(x, y, weights, &w, b, cfg);
    let mut w_new = alloc::vec![0.0; d];

    for _ in 0..cfg.max_epochs {
        let (f_new, g_new, gb_new, step_norm) = loop {
            for j in 0..d {
                let v = w[j] - t * g[j];
                w_new[j] = match cfg.penalty {
                    Penalty::L1 => soft_threshold(v, t * cfg.lambda),
                    Penalty::L2 => v,
                };
            }
            let b_new = b - t * gb;
            let mut lin = (b_new - b) * gb;
            let mut sq = (b_new - b) * (b_new - b);
            for j in 0..d {
                let dj = w_new[j] - w[j];
                lin += dj * g[j];
                sq += dj * dj;
            }
            let (fn_, gn, gbn) = smooth_part(x, y, weights, &w_new, b_new, cfg);
            if !backtrack || fn_ <= f + lin + sq / (2.0 * t) + 1e-12 * f.abs() || t < 1e-12 {
                b = b_new;
                break (fn_, gn, gbn, libm::sqrt(sq));
            }
            t *= 0.5;
        };
        core::mem::swap(&mut w, &mut w_new);
        f = f_new;
        g = g_new;
        gb = gb_new;
        if step_norm / t < cfg.tol {
            break;
        }
        if backtrack {
            t *= 1.25;
        }
    }
    Ok(LogRegModel { weights: w, bias: b, penalty: cfg.penalty, lambda: cfg.lambda })
}
