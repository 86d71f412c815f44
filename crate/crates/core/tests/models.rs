use bkpred_core::eval::roc_auc;
use bkpred_core::matrix::DenseMatrix;
use bkpred_core::models::{
    class_weights, grid_search, oversample, oversample_indices, train_gbt, train_logreg, train_mlp, GbtConfig,
    LogRegConfig, MlpConfig, ModelError, Node, Scorer,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Linearly separable with a margin: label = sign(w . x).
fn planted(n: usize, d: usize, seed: u64) -> (DenseMatrix, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    while rows.len() < n {
        let r: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z: f64 = r.iter().zip(&w).map(|(a, b)| a * b).sum();
        if z.abs() < 0.1 {
            continue;
        }
        y.push(z > 0.0);
        rows.push(r);
    }
    (DenseMatrix::from_rows(&rows), y)
}

#[test]
fn every_family_fits_planted_separable_data() {
    let (x, y) = planted(2000, 28, 1);
    let lr = train_logreg(&x, &y, None, &LogRegConfig { lambda: 1e-4, ..LogRegConfig::default() }).unwrap();
    let mlp_cfg = MlpConfig { hidden: vec![16], learning_rate: 0.1, lambda: 1e-4, epochs: 60, batch_size: 64, seed: 2 };
    let mlp = train_mlp(&x, &y, None, &mlp_cfg).unwrap();
    let gbt = train_gbt(&x, &y, None, &GbtConfig { n_trees: 150, eta: 0.3, max_depth: 4, ..GbtConfig::default() }).unwrap();
    for (name, s) in [("logreg", lr.score(&x)), ("mlp", mlp.score(&x)), ("gbt", gbt.score(&x))] {
        let auc = roc_auc(&s, &y).unwrap();
        assert!(auc >= 0.99, "{name}: training AUC {auc}");
        assert!(s.iter().all(|p| (0.0..=1.0).contains(p)));
    }
}

fn stump_gain(xs: &[f64], y: &[bool], base: f64, thr: f64) -> f64 {
    let p = 1.0 / (1.0 + (-base).exp());
    let (mut gl, mut hl, mut gr, mut hr) = (0.0, 0.0, 0.0, 0.0);
    for (&x, &yi) in xs.iter().zip(y) {
        let g = p - if yi { 1.0 } else { 0.0 };
        let h = p * (1.0 - p);
        if x < thr {
            gl += g;
            hl += h;
        } else {
            gr += g;
            hr += h;
        }
    }
    gl * gl / (hl + 1.0) + gr * gr / (hr + 1.0) - (gl + gr) * (gl + gr) / (hl + hr + 1.0)
}

#[test]
fn stump_threshold_maximizes_enumerated_gain() {
    for seed in 0..30u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(5..40);
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0..12) as f64).collect();
        let y: Vec<bool> = xs.iter().map(|&v| if rng.gen_bool(0.15) { v < 6.0 } else { v >= 6.0 }).collect();
        if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
            continue;
        }
        let x = DenseMatrix::from_vec(n, 1, xs.clone());
        let cfg = GbtConfig { n_trees: 1, eta: 1.0, max_depth: 1, min_child_weight: 0.0, ..GbtConfig::default() };
        let m = train_gbt(&x, &y, None, &cfg).unwrap();
        let mut distinct = xs.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let best = distinct
            .windows(2)
            .map(|w| (w[0] + w[1]) / 2.0)
            .map(|t| (t, stump_gain(&xs, &y, m.base_score, t)))
            .fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        match m.trees[0].nodes[0] {
            Node::Split { threshold, .. } => {
                assert_eq!(threshold, best.0, "seed {seed}");
            }
            Node::Leaf { .. } => assert!(best.1 <= 1e-12, "seed {seed}: missed a split of gain {}", best.1),
        }
    }
}

#[test]
fn depth_one_tree_routes_missing_values() {
    // feature 0 is present exactly for the negatives; feature 1 is noise
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..300 {
        let pos = i % 4 == 0;
        let f0 = if pos { f64::NAN } else { rng.gen_range(-3.0..3.0) };
        rows.push([f0, rng.gen_range(-1.0..1.0)]);
        y.push(pos);
    }
    let x = DenseMatrix::from_rows(&rows);
    let m = train_gbt(&x, &y, None, &GbtConfig { n_trees: 1, eta: 1.0, max_depth: 1, ..GbtConfig::default() }).unwrap();
    assert_eq!(m.trees.len(), 1);
    assert_eq!(m.trees[0].depth(), 1);
    let acc = m.score(&x).iter().zip(&y).filter(|(p, y)| (**p > 0.5) == **y).count();
    assert_eq!(acc, 300);
}

#[test]
fn grid_search_prefers_true_labels() {
    let (x, y) = planted(400, 5, 4);
    let (xv, yv) = planted(200, 5, 4);
    let mut shuffled = y.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in (1..shuffled.len()).rev() {
        shuffled.swap(i, rng.gen_range(0..=i));
    }
    let grid = [true, false, true];
    let cfg = LogRegConfig::default();
    let r = grid_search(
        &grid,
        |&truth| train_logreg(&x, if truth { &y } else { &shuffled }, None, &cfg),
        |m| m.score(&xv),
        &yv,
    )
    .unwrap();
    assert_eq!(r.best_index, 0);
    assert!(r.val_aucs[0] > r.val_aucs[1]);
    assert_eq!(r.val_aucs[0], r.val_aucs[2]);
}

#[test]
fn class_weight_examples() {
    let w = class_weights(&[true, false, false, false]).unwrap();
    assert_eq!(w[0], 2.0);
    assert!((w[1] - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(class_weights(&[true, false]).unwrap(), [1.0, 1.0]);
    assert_eq!(class_weights(&[false, false]), Err(ModelError::SingleClass));
}

proptest! {
    #[test]
    fn oversampling_only_duplicates_positives(
        y in prop::collection::vec(any::<bool>(), 2..200),
        ratio in 0.01f64..=1.0,
        seed in any::<u64>(),
    ) {
        let n_pos = y.iter().filter(|&&v| v).count();
        let n_neg = y.len() - n_pos;
        prop_assume!(n_pos > 0 && n_neg > 0);
        let x = DenseMatrix::from_vec(y.len(), 1, (0..y.len()).map(|i| i as f64).collect());
        let (xo, yo) = oversample(&x, &y, ratio, seed).unwrap();
        let target = ((ratio * n_neg as f64).round() as usize).max(n_pos);
        prop_assert_eq!(yo.iter().filter(|&&v| v).count(), target);
        prop_assert_eq!(yo.iter().filter(|&&v| !v).count(), n_neg);
        for i in y.len()..yo.len() {
            let src = xo.get(i, 0) as usize;
            prop_assert!(yo[i] && y[src]);
        }
        prop_assert_eq!(oversample_indices(&y, ratio, seed).unwrap(), oversample_indices(&y, ratio, seed).unwrap());
        let w = class_weights(&y).unwrap();
        prop_assert!((w.iter().sum::<f64>() - y.len() as f64).abs() < 1e-9);
    }
}

#[test]
fn oversampling_needs_positives() {
    assert_eq!(oversample_indices(&[false, false], 0.5, 0), Err(ModelError::NoMinoritySamples));
}
