use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{base_log_odds, check_xy, sigmoid, ModelError, Scorer};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    pub n_trees: usize,
    /// Shrinkage applied to every tree output, in `(0, 1]`.
    pub eta: f64,
    /// Fraction of rows drawn without replacement for each tree, in `(0, 1]`.
    pub subsample: f64,
    /// Maximum number of splits on any root-to-leaf path.
    pub max_depth: usize,
    pub lambda_leaf: f64,
    /// Minimum hessian sum in each child of a split.
    pub min_child_weight: f64,
    pub seed: u64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        Self { n_trees: 100, eta: 0.1, subsample: 1.0, max_depth: 3, lambda_leaf: 1.0, min_child_weight: 0.01, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    /// Present values `< threshold` go left; missing values follow `default_left`.
    Split { feature: usize, threshold: f64, default_left: bool, left: usize, right: usize },
    Leaf { value: f64 },
}

/// Flat binary tree; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, default_left, left, right } => {
                    let v = row[feature];
                    let go_left = if v.is_nan() { default_left } else { v < threshold };
                    k = if go_left { left } else { right };
                }
            }
        }
    }

    /// Number of splits on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], k: usize) -> usize {
            match nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub trees: Vec<Tree>,
    pub eta: f64,
    pub n_trees: usize,
    pub subsample: f64,
    pub max_depth: usize,
    pub lambda_leaf: f64,
    pub base_score: f64,
}

impl GbtModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.base_score + self.eta * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }
}

impl Scorer<DenseMatrix> for GbtModel {
    fn score(&self, x: &DenseMatrix) -> Vec<f64> {
        (0..x.rows()).map(|i| sigmoid(self.margin(x.row(i)))).collect()
    }
}

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    default_left: bool,
}

/// Per-node state while a level is being searched.
#[derive(Clone)]
struct Open {
    node: usize,
    g: f64,
    h: f64,
    g_miss: f64,
    h_miss: f64,
    // running sums over present values already passed in the scan
    gl: f64,
    hl: f64,
    last: f64,
    best: Option<Candidate>,
}

fn score_side(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

fn consider(o: &mut Open, feature: usize, threshold: f64, cfg: &GbtConfig) {
    let parent = score_side(o.g, o.h, cfg.lambda_leaf);
    // missing left first; the right-hand routing must be strictly better
    for default_left in [true, false] {
        let (gl, hl) = if default_left { (o.gl + o.g_miss, o.hl + o.h_miss) } else { (o.gl, o.hl) };
        let (gr, hr) = (o.g - gl, o.h - hl);
        if hl < cfg.min_child_weight || hr < cfg.min_child_weight {
            continue;
        }
        let gain = score_side(gl, hl, cfg.lambda_leaf) + score_side(gr, hr, cfg.lambda_leaf) - parent;
        if gain > 1e-12 && o.best.map_or(true, |b| gain > b.gain) {
            o.best = Some(Candidate { gain, feature, threshold, default_left });
        }
    }
}

fn build_tree(
    sorted: &[Vec<u32>],
    missing: &[Vec<u32>],
    x: &DenseMatrix,
    grad: &[f64],
    hess: &[f64],
    in_bag: &[bool],
    cfg: &GbtConfig,
) -> Tree {
    let n = grad.len();
    let mut nodes = Vec::new();
    let mut slot = alloc::vec![NONE; n];
    let (mut g, mut h) = (0.0, 0.0);
    for i in 0..n {
        if in_bag[i] {
            slot[i] = 0;
            g += grad[i];
            h += hess[i];
        }
    }
    nodes.push(Node::Leaf { value: -g / (h + cfg.lambda_leaf) });
    let fresh = |node: usize, g: f64, h: f64| Open {
        node,
        g,
        h,
        g_miss: 0.0,
        h_miss: 0.0,
        gl: 0.0,
        hl: 0.0,
        last: f64::NAN,
        best: None,
    };
    let mut open = alloc::vec![fresh(0, g, h)];

    for _depth in 0..cfg.max_depth {
        if open.is_empty() {
            break;
        }
        for (f, col) in sorted.iter().enumerate() {
            for o in open.iter_mut() {
                o.g_miss = 0.0;
                o.h_miss = 0.0;
                o.gl = 0.0;
                o.hl = 0.0;
                o.last = f64::NAN;
            }
            for &i in &missing[f] {
                let s = slot[i as usize];
                if s != NONE {
                    let o = &mut open[s as usize];
                    o.g_miss += grad[i as usize];
                    o.h_miss += hess[i as usize];
                }
            }
            for &i in col {
                let i = i as usize;
                let s = slot[i];
                if s == NONE {
                    continue;
                }
                let v = x.get(i, f);
                let o = &mut open[s as usize];
                if !o.last.is_nan() && v > o.last {
                    let thr = o.last + (v - o.last) / 2.0;
                    consider(o, f, thr, cfg);
                }
                o.gl += grad[i];
                o.hl += hess[i];
                o.last = v;
            }
            // every present value left, missing values alone on the right
            for o in open.iter_mut() {
                if !o.last.is_nan() && o.h_miss > 0.0 {
                    let thr = o.last + (1.0 + o.last.abs()) * 1e-6;
                    let parent = score_side(o.g, o.h, cfg.lambda_leaf);
                    let (gl, hl) = (o.g - o.g_miss, o.h - o.h_miss);
                    if hl >= cfg.min_child_weight && o.h_miss >= cfg.min_child_weight {
                        let gain = score_side(gl, hl, cfg.lambda_leaf) + score_side(o.g_miss, o.h_miss, cfg.lambda_leaf) - parent;
                        if gain > 1e-12 && o.best.map_or(true, |b| gain > b.gain) {
                            o.best = Some(Candidate { gain, feature: f, threshold: thr, default_left: false });
                        }
                    }
                }
            }
        }

        // apply the chosen splits and open the children
        let mut next: Vec<Open> = Vec::new();
        let mut child_slots = alloc::vec![(NONE, NONE); open.len()];
        for (s, o) in open.iter().enumerate() {
            if let Some(c) = o.best {
                let left = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[o.node] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    default_left: c.default_left,
                    left,
                    right: left + 1,
                };
                child_slots[s] = (next.len() as u32, next.len() as u32 + 1);
                next.push(fresh(left, 0.0, 0.0));
                next.push(fresh(left + 1, 0.0, 0.0));
            }
        }
        for i in 0..n {
            let s = slot[i];
            if s == NONE {
                continue;
            }
            let (l, r) = child_slots[s as usize];
            if l == NONE {
                slot[i] = NONE;
                continue;
            }
            let c = open[s as usize].best.expect("split chosen");
            let v = x.get(i, c.feature);
            let go_left = if v.is_nan() { c.default_left } else { v < c.threshold };
            let t = if go_left { l } else { r };
            slot[i] = t;
            next[t as usize].g += grad[i];
            next[t as usize].h += hess[i];
        }
        for o in &next {
            nodes[o.node] = Node::Leaf { value: -o.g / (o.h + cfg.lambda_leaf) };
        }
        open = next;
    }
    Tree { nodes }
}

/// Second-order gradient boosting on the logistic loss. Missing values are
/// `NaN`; each split learns the side they default to.
pub fn train_gbt(x: &DenseMatrix, y: &[bool], weights: Option<&[f64]>, cfg: &GbtConfig) -> Result<GbtModel, ModelError> {
    check_xy(x, y, weights)?;
    if x.as_slice().iter().any(|v| v.is_infinite()) {
        return Err(ModelError::NonFinite);
    }
    if !(cfg.eta > 0.0 && cfg.eta <= 1.0) {
        return Err(ModelError::Config("eta must lie in (0, 1]"));
    }
    if !(cfg.subsample > 0.0 && cfg.subsample <= 1.0) {
        return Err(ModelError::Config("subsample must lie in (0, 1]"));
    }
    if !(cfg.lambda_leaf >= 0.0) || !(cfg.min_child_weight >= 0.0) {
        return Err(ModelError::Config("leaf regularizer and min_child_weight must be nonnegative"));
    }
    let n = y.len();
    let d = x.cols();
    let mut sorted = Vec::with_capacity(d);
    let mut missing = Vec::with_capacity(d);
    for f in 0..d {
        let mut present: Vec<u32> = Vec::new();
        let mut absent: Vec<u32> = Vec::new();
        for i in 0..n {
            if x.get(i, f).is_nan() {
                absent.push(i as u32);
            } else {
                present.push(i as u32);
            }
        }
        present.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)));
        sorted.push(present);
        missing.push(absent);
    }

    let base_score = base_log_odds(y, weights);
    let mut margin = alloc::vec![base_score; n];
    let mut grad = alloc::vec![0.0; n];
    let mut hess = alloc::vec![0.0; n];
    let mut in_bag = alloc::vec![true; n];
    let m = libm::round(cfg.subsample * n as f64).max(1.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut trees = Vec::with_capacity(cfg.n_trees);

    for _ in 0..cfg.n_trees {
        if m < n {
            // partial Fisher-Yates: the first m slots form the sample
            for j in 0..m {
                let k = rng.gen_range(j..n);
                perm.swap(j, k);
            }
            in_bag.iter_mut().for_each(|b| *b = false);
            for &i in &perm[..m] {
                in_bag[i] = true;
            }
        }
        for i in 0..n {
            let s = weights.map_or(1.0, |w| w[i]);
            let p = sigmoid(margin[i]);
            grad[i] = s * (p - if y[i] { 1.0 } else { 0.0 });
            hess[i] = s * p * (1.0 - p);
        }
        let tree = build_tree(&sorted, &missing, x, &grad, &hess, &in_bag, cfg);
        for (i, mi) in margin.iter_mut().enumerate() {
            *mi += cfg.eta * tree.predict(x.row(i));
        }
        trees.push(tree);
    }
    Ok(GbtModel {
        trees,
        eta: cfg.eta,
        n_trees: cfg.n_trees,
        subsample: cfg.subsample,
        max_depth: cfg.max_depth,
        lambda_leaf: cfg.lambda_leaf,
        base_score,
    })
}
