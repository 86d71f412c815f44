use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_xy, log_loss, sigmoid, ModelError, Scorer};
use crate::matrix::{DenseMatrix, Design};

/// Fully connected layer; `weights` is `n_out x n_in`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Self { n_in, n_out, weights: alloc::vec![0.0; n_in * n_out], bias: alloc::vec![0.0; n_out] }
    }

    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.n_out {
            let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
            out.push(row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + self.bias[o]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    /// L2 weight decay on weights (not biases): `lambda / 2 * sum ||W||^2`.
    pub lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self { hidden: alloc::vec![16], learning_rate: 0.05, lambda: 1e-4, epochs: 100, batch_size: 256, seed: 0 }
    }
}

/// ReLU hidden layers and a single sigmoid output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub learning_rate: f64,
    pub lambda: f64,
}

impl MlpModel {
    /// Hidden layers get seeded He-uniform weights; the output layer and all
    /// biases start at zero.
    pub fn init(n_in: usize, hidden: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut prev = n_in;
        for &h in hidden {
            let mut l = Layer::zeros(prev, h);
            let bound = libm::sqrt(6.0 / prev.max(1) as f64);
            for w in &mut l.weights {
                *w = rng.gen_range(-bound..bound);
            }
            layers.push(l);
            prev = h;
        }
        layers.push(Layer::zeros(prev, 1));
        Self { layers, learning_rate: 0.0, lambda: 0.0 }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().map(|l| l.n_in).collect();
        s.push(1);
        s
    }

    /// Output logit plus the post-activation values of every layer input.
    fn forward(&self, x: &[f64]) -> (f64, Vec<Vec<f64>>) {
        let mut acts = Vec::with_capacity(self.layers.len());
        acts.push(x.to_vec());
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            l.forward(acts.last().expect("input pushed"), &mut z);
            if k < last {
                acts.push(z.iter().map(|v| v.max(0.0)).collect());
            }
        }
        (z[0], acts)
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.forward(x).0
    }

    /// Weighted mean loss over `rows` plus weight decay, and the gradient
    /// with the same shape as `self.layers`.
    pub fn loss_grad(&self, x: &DenseMatrix, y: &[bool], weights: Option<&[f64]>, rows: &[usize]) -> (f64, Vec<Layer>) {
        let mut grads: Vec<Layer> = self.layers.iter().map(|l| Layer::zeros(l.n_in, l.n_out)).collect();
        let total: f64 = rows.iter().map(|&i| weights.map_or(1.0, |w| w[i])).sum();
        let mut loss = 0.0;
        for &i in rows {
            let s = weights.map_or(1.0, |w| w[i]) / total;
            if s == 0.0 {
                continue;
            }
            let (z, acts) = self.forward(x.row(i));
            loss += s * log_loss(z, y[i]);
            let mut delta = alloc::vec![s * (sigmoid(z) - if y[i] { 1.0 } else { 0.0 })];
            for k in (0..self.layers.len()).rev() {
                let l = &self.layers[k];
                let a = &acts[k];
                let g = &mut grads[k];
                for o in 0..l.n_out {
                    g.bias[o] += delta[o];
                    let row = &mut g.weights[o * l.n_in..(o + 1) * l.n_in];
                    for (gw, av) in row.iter_mut().zip(a) {
                        *gw += delta[o] * av;
                    }
                }
                if k > 0 {
                    // back through W, then the ReLU of the previous layer
                    let mut prev = alloc::vec![0.0; l.n_in];
                    for o in 0..l.n_out {
                        let row = &l.weights[o * l.n_in..(o + 1) * l.n_in];
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += delta[o] * w;
                        }
                    }
                    for (p, av) in prev.iter_mut().zip(a) {
                        if *av <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        for (l, g) in self.layers.iter().zip(&mut grads) {
            loss += 0.5 * self.lambda * l.weights.iter().map(|w| w * w).sum::<f64>();
            for (gw, w) in g.weights.iter_mut().zip(&l.weights) {
                *gw += self.lambda * w;
            }
        }
        (loss, grads)
    }

    /// All parameters flattened layer by layer (weights, then bias).
    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut k = 0;
        for l in &mut self.layers {
            for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *v = p[k];
                k += 1;
            }
        }
    }
}

impl Scorer<DenseMatrix> for MlpModel {
    fn score(&self, x: &DenseMatrix) -> Vec<f64> {
        (0..x.rows()).map(|i| sigmoid(self.logit(x.row(i)))).collect()
    }
}

/// Minibatch gradient descent with a fixed epoch budget. Batches follow a
/// seeded shuffle each epoch; a batch covering all rows keeps input order.
pub fn train_mlp(x: &DenseMatrix, y: &[bool], weights: Option<&[f64]>, cfg: &MlpConfig) -> Result<MlpModel, ModelError> {
    check_xy(x, y, weights)?;
    if !x.all_finite() {
        return Err(ModelError::NonFinite);
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) || !(cfg.lambda >= 0.0) {
        return Err(ModelError::Config("batch_size, learning_rate and lambda must be positive"));
    }
    if cfg.hidden.contains(&0) {
        return Err(ModelError::Config("hidden layers must be nonempty"));
    }
    let mut model = MlpModel::init(x.cols(), &cfg.hidden, cfg.seed);
    model.learning_rate = cfg.learning_rate;
    model.lambda = cfg.lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    for _ in 0..cfg.epochs {
        if cfg.batch_size < order.len() {
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(cfg.batch_size) {
            let (_, grads) = model.loss_grad(x, y, weights, batch);
            for (l, g) in model.layers.iter_mut().zip(&grads) {
                for (w, gw) in l.weights.iter_mut().zip(&g.weights) {
                    *w -= cfg.learning_rate * gw;
                }
                for (b, gb) in l.bias.iter_mut().zip(&g.bias) {
                    *b -= cfg.learning_rate * gb;
                }
            }
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_is_learned() {
        let x = DenseMatrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]);
        let y = [false, true, true, false];
        let cfg = MlpConfig { hidden: alloc::vec![8], learning_rate: 0.5, lambda: 0.0, epochs: 3000, batch_size: 4, seed: 1 };
        let m = train_mlp(&x, &y, None, &cfg).unwrap();
        let acc = m.score(&x).iter().zip(&y).filter(|(p, y)| (**p > 0.5) == **y).count();
        assert_eq!(acc, 4);
    }

    #[test]
    fn shapes() {
        let m = MlpModel::init(5, &[4, 3], 0);
        assert_eq!(m.layer_sizes(), [5, 4, 3, 1]);
        assert_eq!(m.params().len(), 5 * 4 + 4 + 4 * 3 + 3 + 3 + 1);
        assert!(m.layers[2].weights.iter().all(|&w| w == 0.0));
    }
}
