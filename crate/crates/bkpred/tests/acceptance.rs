//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use bkpred::cli::run_args;
use bkpred::config::RunConfig;
use bkpred::io::{read_jsonl, write_jsonl};
use bkpred::pipeline::{self, Layout};
use bkpred::synth::{self, SynthConfig};
use bkpred_core::eval::{average_precision, cap_ratio, ranked_order, recall_at_k, roc_auc};
use bkpred_core::labeling::{add_years, label_for, LabelWindow, Split, SplitBounds};
use bkpred_core::linkage::{match_keys, LinkKey, MatchBasis};
use bkpred_core::llm::{shuffle_eval, AbsentScore, LlmResponseRecord, ShuffleConfig};
use bkpred_core::matrix::DenseMatrix;
use bkpred_core::models::{smooth_loss_grad, train_gbt, GbtConfig, MlpModel};
use bkpred_core::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances and budgets.
const C1_INSTANCES: usize = 1000;
const C1_MAX_N: usize = 500;
const C1_BUDGET: Duration = Duration::from_secs(10);
const C2_IDENTITY_TOL: f64 = 1e-9;
const C2_REPORTED_TOL: f64 = 0.0015;
const C3_ROWS: usize = 18_289;
const C3_POS: usize = 122;
const C3_TOP_POS: usize = 35;
const C4_LOGREG_TOL: f64 = 1e-5;
const C4_MLP_TOL: f64 = 1e-4;
const C4_BUDGET: Duration = Duration::from_secs(5);
const C5_SEED: u64 = 7;
const C5_ENSEMBLE_SLACK: f64 = 0.005;
const C5_BUDGET: Duration = Duration::from_secs(300);
const C9_SHUFFLES: usize = 2000;
const C9_TOL: f64 = 0.05;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).unwrap()
}

fn brute_auc(s: &[f64], y: &[bool]) -> f64 {
    let mut twice = 0u128;
    let (mut p, mut n) = (0u128, 0u128);
    for (i, &yi) in y.iter().enumerate() {
        if yi {
            p += 1;
        } else {
            n += 1;
        }
        if !yi {
            continue;
        }
        for (j, &yj) in y.iter().enumerate() {
            if yj {
                continue;
            }
            if s[i] > s[j] {
                twice += 2;
            } else if s[i] == s[j] {
                twice += 1;
            }
        }
    }
    twice as f64 / (2.0 * p as f64 * n as f64)
}

/// Random scored instance with both classes; a third of them draw scores
/// from a handful of levels so ties are common.
fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<bool>) {
    let n = rng.gen_range(2..=C1_MAX_N);
    let levels = match rng.gen_range(0..3) {
        0 => Some(rng.gen_range(1..=4)),
        1 => Some(rng.gen_range(5..=30)),
        _ => None,
    };
    let rate = rng.gen_range(0.01..0.6);
    let mut y: Vec<bool> = (0..n).map(|_| rng.gen_bool(rate)).collect();
    y[0] = true;
    y[1] = false;
    y.shuffle(rng);
    let s = (0..n)
        .map(|_| match levels {
            Some(l) => rng.gen_range(0..l) as f64 / l as f64,
            None => rng.gen::<f64>(),
        })
        .collect();
    (s, y)
}

fn c1_metric_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut tied = 0;
    for t in 0..C1_INSTANCES {
        let (s, y) = random_instance(&mut rng);
        let mut u = s.clone();
        u.sort_by(f64::total_cmp);
        u.dedup();
        if u.len() < s.len() {
            tied += 1;
        }
        let (got, want) = (roc_auc(&s, &y).unwrap(), brute_auc(&s, &y));
        ensure(got == want, || format!("instance {t}: roc_auc {got} vs brute force {want}"))?;
    }
    // hand-expanded average precision
    let t = true;
    let f = false;
    let fixtures: [(&[f64], &[bool], f64); 5] = [
        (&[0.9, 0.8, 0.7, 0.6], &[t, f, t, f], (1.0 + 2.0 / 3.0) / 2.0),
        (&[0.1, 0.2, 0.3], &[t, f, f], 1.0 / 3.0),
        (&[0.5, 0.4, 0.3, 0.2, 0.1], &[t, t, f, f, t], (1.0 + 1.0 + 3.0 / 5.0) / 3.0),
        (
            &[0.95, 0.9, 0.85, 0.8, 0.75, 0.7, 0.65, 0.6, 0.55, 0.5],
            &[f, t, f, f, t, f, t, f, f, t],
            (1.0 / 2.0 + 2.0 / 5.0 + 3.0 / 7.0 + 4.0 / 10.0) / 4.0,
        ),
        (&[3.0, 1.0, 2.0, 4.0], &[f, t, t, t], (1.0 + 2.0 / 3.0 + 3.0 / 4.0) / 3.0),
    ];
    for (i, (s, y, want)) in fixtures.iter().enumerate() {
        let got = average_precision(s, y).unwrap();
        ensure((got - want).abs() < 1e-12, || format!("AP fixture {i}: {got} vs {want}"))?;
    }
    let el = start.elapsed();
    ensure(el < C1_BUDGET, || format!("took {el:?}"))?;
    Ok(format!("{C1_INSTANCES} instances ({tied} with ties) exact, 5 AP fixtures, {:.2}s", el.as_secs_f64()))
}

fn c2_cap_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..C1_INSTANCES {
        let (s, y) = random_instance(&mut rng);
        let gap = (cap_ratio(&s, &y).unwrap() - (2.0 * roc_auc(&s, &y).unwrap() - 1.0)).abs();
        worst = worst.max(gap);
    }
    ensure(worst <= C2_IDENTITY_TOL, || format!("max |cap - (2auc-1)| = {worst:e}"))?;
    let reported = [(0.915, 0.830), (0.925, 0.851), (0.936, 0.873), (0.886, 0.771), (0.948, 0.896)];
    for (auc, cap) in reported {
        let implied: f64 = 2.0 * auc - 1.0;
        ensure((implied - cap).abs() <= C2_REPORTED_TOL + 1e-12, || format!("AUC {auc} implies {implied:.4}, reported {cap}"))?;
    }
    Ok(format!("max identity gap {worst:.1e}; 5 reported AUC/CAP pairs within {C2_REPORTED_TOL}"))
}

fn c3_recall_fixture() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let top: Vec<bool> = {
        let mut v: Vec<bool> = (0..100).map(|i| i < C3_TOP_POS).collect();
        v.shuffle(&mut rng);
        v
    };
    let mut rest: Vec<bool> = (0..C3_ROWS - 100).map(|i| i < C3_POS - C3_TOP_POS).collect();
    rest.shuffle(&mut rng);
    let y: Vec<bool> = top.into_iter().chain(rest).collect();
    let s: Vec<f64> = (0..C3_ROWS).map(|i| (C3_ROWS - i) as f64).collect();
    ensure(y.iter().filter(|&&v| v).count() == C3_POS, || "fixture composition".into())?;
    let r = recall_at_k(&s, &y, 100).unwrap();
    ensure((r * 1000.0).round() / 1000.0 == 0.287, || format!("recall@100 {r}"))?;
    let order = ranked_order(&s);
    let fp = order[..100].iter().filter(|&&i| !y[i]).count();
    let neg = C3_ROWS - C3_POS;
    let fpr = fp as f64 / neg as f64;
    ensure(fp == 65 && neg == 18_167, || format!("FPR {fp}/{neg}"))?;
    ensure((fpr * 1e4).round() / 1e4 == 0.0036, || format!("FPR {fpr}"))?;
    Ok(format!("recall@100 {r:.4} -> 0.287, FPR {fp}/{neg} = {fpr:.5}"))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

fn c4_gradients() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_lr, mut worst_mlp) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let n = rng.gen_range(4..=16);
        let p = rng.gen_range(2..=6);
        let x = DenseMatrix::from_vec(n, p, (0..n * p).map(|_| rng.gen_range(-2.0..2.0)).collect());
        let y: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        let wts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();

        let w: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = rng.gen_range(-1.0..1.0);
        let (_, g, gb) = smooth_loss_grad(&x, &y, Some(&wts), &w, b);
        let h = 1e-5;
        for j in 0..=p {
            let f = |delta: f64| {
                let mut w2 = w.clone();
                let mut b2 = b;
                if j < p {
                    w2[j] += delta;
                } else {
                    b2 += delta;
                }
                smooth_loss_grad(&x, &y, Some(&wts), &w2, b2).0
            };
            let num = (f(h) - f(-h)) / (2.0 * h);
            let ana = if j < p { g[j] } else { gb };
            worst_lr = worst_lr.max(rel_err(ana, num));
        }

        let mut m = MlpModel::init(p, &[rng.gen_range(3..=8), rng.gen_range(2..=5)], rng.gen());
        m.lambda = 1e-2;
        // nonzero biases so every unit sees a generic input
        let mut params = m.params();
        params.iter_mut().for_each(|v| *v += rng.gen_range(-0.1..0.1));
        m.set_params(&params);
        let rows: Vec<usize> = (0..n).collect();
        let (_, grads) = m.loss_grad(&x, &y, Some(&wts), &rows);
        let ana: Vec<f64> = grads.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect();
        let h = 1e-6;
        for k in 0..params.len() {
            let mut probe = m.clone();
            let mut q = params.clone();
            q[k] += h;
            probe.set_params(&q);
            let up = probe.loss_grad(&x, &y, Some(&wts), &rows).0;
            q[k] -= 2.0 * h;
            probe.set_params(&q);
            let down = probe.loss_grad(&x, &y, Some(&wts), &rows).0;
            worst_mlp = worst_mlp.max(rel_err(ana[k], (up - down) / (2.0 * h)));
        }
    }
    ensure(worst_lr <= C4_LOGREG_TOL, || format!("logreg rel err {worst_lr:e}"))?;
    ensure(worst_mlp <= C4_MLP_TOL, || format!("MLP rel err {worst_mlp:e}"))?;
    let el = start.elapsed();
    ensure(el < C4_BUDGET, || format!("took {el:?}"))?;
    Ok(format!("20 batches; max rel err logreg {worst_lr:.1e}, MLP {worst_mlp:.1e}; {:.2}s", el.as_secs_f64()))
}

fn c5_synthetic_end_to_end() -> Check {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = synth::generate(&SynthConfig::standard(C5_SEED)).map_err(|e| e.to_string())?;
    let p = synth::write(&data, &tmp.path().join("data")).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::default();
    cfg.seed = Some(C5_SEED);
    cfg.paths.corpus = Some(p.corpus);
    cfg.paths.fundamentals = Some(p.fundamentals);
    cfg.paths.calendar = Some(p.calendar);
    cfg.paths.deflator = Some(p.deflator);
    let out = pipeline::run(&cfg, &Layout::new(&tmp.path().join("out"))).map_err(|e| e.to_string())?;
    let m: BTreeMap<&str, _> = out.metrics.iter().map(|(n, r)| (n.as_str(), r)).collect();
    let get = |n: &str| m.get(n).copied().ok_or_else(|| format!("no {n} metrics"));
    let (gbt, tfidf, ens) = (get("gbt")?, get("tfidf")?, get("ensemble")?);
    let summary = format!(
        "AUC gbt {:.3} tfidf {:.3} ensemble {:.3}; recall@100 tfidf {:.3} gbt {:.3}; CAP gbt {:.3} tfidf {:.3}",
        gbt.roc_auc, tfidf.roc_auc, ens.roc_auc, tfidf.recall_at_k, gbt.recall_at_k, gbt.cap_ratio, tfidf.cap_ratio
    );
    ensure(ens.roc_auc >= gbt.roc_auc.max(tfidf.roc_auc) - C5_ENSEMBLE_SLACK, || format!("ensemble AUC: {summary}"))?;
    ensure(tfidf.recall_at_k > gbt.recall_at_k, || format!("recall@100: {summary}"))?;
    ensure(gbt.cap_ratio > tfidf.cap_ratio, || format!("CAP: {summary}"))?;
    let el = start.elapsed();
    ensure(el < C5_BUDGET, || format!("took {el:?}"))?;
    Ok(format!("{summary}; {:.0}s", el.as_secs_f64()))
}

fn c6_labels_and_splits() -> Check {
    let filings = [
        (d(2009, 12, 31), d(2010, 3, 15)),
        (d(2011, 9, 30), d(2011, 12, 31)),
        (d(2011, 11, 30), d(2012, 2, 29)),
        (d(2015, 10, 31), d(2016, 1, 1)),
    ];
    let mut cases = 0;
    for (t_pr, t_fd) in filings {
        let w = LabelWindow::new(t_pr, t_fd).map_err(|e| e.to_string())?;
        let end = add_years(t_fd, 1);
        let day = chrono::Duration::days(1);
        let expect = [
            (t_pr, false),
            (t_fd - day, false),
            (t_fd, false),
            (t_fd + day, true),
            (end - day, true),
            (end, true),
            (end + day, false),
        ];
        for (b, want) in expect {
            ensure(label_for(&w, &[b]) == want, || format!("filed {t_fd}, bankrupt {b}: expected {want}"))?;
            cases += 1;
        }
        // any one in-window date among several suffices
        ensure(label_for(&w, &[t_fd - day, t_fd + day, end + day]), || format!("filed {t_fd}: mixed dates"))?;
        ensure(!label_for(&w, &[]), || "no dates".into())?;
    }
    ensure(add_years(d(2012, 2, 29), 1) == d(2013, 2, 28), || "leap-day anniversary".into())?;
    let b = SplitBounds::default();
    let splits = [
        (d(1993, 1, 1), Split::Train),
        (d(2011, 12, 31), Split::Train),
        (d(2012, 1, 1), Split::Validation),
        (d(2015, 12, 31), Split::Validation),
        (d(2016, 1, 1), Split::Test),
        (d(2020, 12, 31), Split::Test),
    ];
    for (fd, want) in splits {
        let got = b.split_for(fd);
        ensure(got == want, || format!("{fd}: {got:?} vs {want:?}"))?;
    }
    Ok(format!("{cases} window cases over (t_FD, t_FD + 1y]; 6 split boundary dates"))
}

/// Independent greedy: repeatedly take the unused candidate with the least
/// (gap, basis, filing, fundamentals).
fn oracle_links(f: &[LinkKey], g: &[LinkKey]) -> Vec<(usize, usize, MatchBasis, u32)> {
    let mut all = Vec::new();
    for (i, a) in f.iter().enumerate() {
        for (j, b) in g.iter().enumerate() {
            let gap = (a.fiscal_year_end - b.fiscal_year_end).num_days().unsigned_abs() as u32;
            let basis = if a.cik.is_some() && a.cik == b.cik {
                MatchBasis::Cik
            } else if !a.name.is_empty() && a.name == b.name {
                MatchBasis::Name
            } else {
                continue;
            };
            if gap <= 7 {
                all.push((i, j, basis, gap));
            }
        }
    }
    let mut out = Vec::new();
    loop {
        let next = all
            .iter()
            .filter(|c| out.iter().all(|o: &(usize, usize, MatchBasis, u32)| o.0 != c.0 && o.1 != c.1))
            .min_by_key(|c| (c.3, c.2, c.0, c.1))
            .copied();
        match next {
            Some(c) => out.push(c),
            None => break,
        }
    }
    out.sort();
    out
}

fn random_key(rng: &mut ChaCha8Rng, base: NaiveDate) -> LinkKey {
    let cik = if rng.gen_bool(0.7) { Some(format!("{}", rng.gen_range(1..=3))) } else { None };
    let name = ["ALPHA", "BETA", "GAMMA", ""][rng.gen_range(0..4)].to_string();
    LinkKey { cik, name, fiscal_year_end: base + chrono::Duration::days(rng.gen_range(-9..=9)) }
}

fn c7_linkage() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base = d(2005, 12, 31);
    let mut n_inst = 0;
    for nf in 0..=6 {
        for ng in 0..=6 {
            for _ in 0..60 {
                let f: Vec<LinkKey> = (0..nf).map(|_| random_key(&mut rng, base)).collect();
                let g: Vec<LinkKey> = (0..ng).map(|_| random_key(&mut rng, base)).collect();
                let got: Vec<_> = match_keys(&f, &g).iter().map(|p| (p.filing, p.fundamentals, p.basis, p.gap_days)).collect();
                let mut got_sorted = got.clone();
                got_sorted.sort();
                let want = oracle_links(&f, &g);
                ensure(got_sorted == want, || format!("{nf}x{ng}: {got:?} vs oracle {want:?}"))?;
                let mut fi: Vec<_> = got.iter().map(|p| p.0).collect();
                let mut gi: Vec<_> = got.iter().map(|p| p.1).collect();
                fi.dedup();
                gi.sort();
                gi.dedup();
                ensure(fi.len() == got.len() && gi.len() == got.len(), || "not a partial injection".into())?;
                ensure(got.iter().all(|p| p.3 <= 7), || "gap over 7 days".into())?;
                n_inst += 1;
            }
        }
    }
    // the 7-day boundary itself
    let k = |days: i64| LinkKey { cik: Some("1".into()), name: "A".into(), fiscal_year_end: base + chrono::Duration::days(days) };
    ensure(match_keys(&[k(0)], &[k(7)]).len() == 1, || "7 days must link".into())?;
    ensure(match_keys(&[k(0)], &[k(-7)]).len() == 1, || "-7 days must link".into())?;
    ensure(match_keys(&[k(0)], &[k(8)]).is_empty(), || "8 days must not link".into())?;
    Ok(format!("{n_inst} instances up to 6x6 match the enumerated greedy oracle"))
}

fn c8_missing_routing() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 200;
    let y: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
    let mut data = Vec::with_capacity(n * 2);
    for &yi in &y {
        data.push(if yi { f64::NAN } else { rng.gen_range(-1.0..1.0) });
        data.push(rng.gen_range(-1.0..1.0));
    }
    let x = DenseMatrix::from_vec(n, 2, data);
    let cfg = GbtConfig { n_trees: 1, eta: 1.0, max_depth: 1, ..GbtConfig::default() };
    let m = train_gbt(&x, &y, None, &cfg).map_err(|e| e.to_string())?;
    ensure(m.trees.len() == 1 && m.trees[0].depth() == 1, || "expected one depth-1 tree".into())?;
    let correct = (0..n).filter(|&i| (m.margin(x.row(i)) > 0.0) == y[i]).count();
    ensure(correct == n, || format!("accuracy {correct}/{n}"))?;
    Ok(format!("one depth-1 tree, training accuracy {correct}/{n}"))
}

fn c9_shuffle() -> Check {
    let distinct: Vec<Option<u8>> = (1..=10).map(Some).collect();
    let labels: Vec<bool> = (0..10).map(|i| i % 3 == 0).collect();
    let cfg = ShuffleConfig { n_shuffles: 50, seed: 9, k: 3, absent: AbsentScore::Exclude };
    let r = shuffle_eval(&distinct, &labels, &cfg).map_err(|e| e.to_string())?;
    for (name, s) in [("roc_auc", r.roc_auc), ("ap", r.ap), ("recall", r.recall_at_k), ("cap", r.cap_ratio)] {
        ensure(s.std == 0.0, || format!("{name} std {}", s.std))?;
    }
    let cfg = ShuffleConfig { n_shuffles: C9_SHUFFLES, seed: 9, k: 1, absent: AbsentScore::Exclude };
    let r = shuffle_eval(&[Some(5), Some(5)], &[true, false], &cfg).map_err(|e| e.to_string())?;
    let mean = r.recall_at_k.mean;
    ensure((mean - 0.5).abs() <= C9_TOL, || format!("tied recall@1 mean {mean}"))?;
    Ok(format!("distinct scores std 0; two tied records recall@1 mean {mean:.4} over {C9_SHUFFLES} shuffles"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tree_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[derive(serde::Deserialize)]
struct TextRow {
    record_id: String,
    text: String,
}

fn every_stage(cfg: &Path, out: &Path, replay: &Path) -> Result<(), String> {
    let synth_out = out.join("synth");
    let stages: [&[&str]; 20] = [
        &["--out", s(&synth_out), "synth", "--small"],
        &["ingest"],
        &["link"],
        &["label"],
        &["split"],
        &["featurize"],
        &["tune"],
        &["train", "--family", "gbt"],
        &["train", "--family", "tfidf"],
        &["train", "--family", "gbt", "--part", "train"],
        &["score", "--family", "gbt"],
        &["score", "--family", "tfidf"],
        &["ensemble"],
        &["evaluate"],
        &["report"],
        &["stats"],
        &["llm-collect", "--sample", "test-random", "--replay", s(replay)],
        &["llm-eval", "--sample", "test-random"],
        &["llm-collect", "--sample", "train-balanced", "--replay", s(replay)],
        &["llm-eval", "--sample", "train-balanced"],
    ];
    for args in stages {
        let mut all = vec!["--config", s(cfg)];
        if args[0] != "--out" {
            all.extend(["--out", s(out)]);
        }
        all.extend_from_slice(args);
        if run_args(&all) != 0 {
            return Err(format!("bkpred {args:?} failed"));
        }
    }
    Ok(())
}

fn c10_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let data = synth::generate(&SynthConfig::small(10)).map_err(|e| e.to_string())?;
    let p = synth::write(&data, &root.join("data")).map_err(|e| e.to_string())?;
    let cfg = format!(
        "seed = 10\n[paths]\ncorpus = {:?}\nfundamentals = {:?}\ncalendar = {:?}\ndeflator = {:?}\n\
         [models]\nfamilies = [\"gbt\", \"tfidf\"]\n[models.gbt]\nn_trees = [30]\n\
         [models.tfidf]\nngram_range = [[1, 1]]\nlambda = [1e-3]\n\
         [llm]\nsample_size = 300\nrequests_per_second = 1000000.0\n",
        s(&p.corpus),
        s(&p.fundamentals),
        s(&p.calendar),
        s(&p.deflator)
    );
    let cfg_path = root.join("run.toml");
    fs::write(&cfg_path, cfg).map_err(|e| e.to_string())?;

    // canned responses for every MD&A text, a few left unanswered
    let scratch = root.join("scratch");
    for args in [&["ingest"][..], &["link"], &["label"], &["featurize"]] {
        let mut all = vec!["--config", s(&cfg_path), "--out", s(&scratch)];
        all.extend_from_slice(args);
        ensure(run_args(&all) == 0, || format!("scratch {args:?}"))?;
    }
    let texts: Vec<TextRow> = read_jsonl(&scratch.join("mdna.jsonl")).map_err(|e| e.to_string())?;
    let canned: Vec<LlmResponseRecord> = texts
        .iter()
        .enumerate()
        .filter(|(i, _)| i % 40 != 0)
        .map(|(_, t)| {
            let score = if t.text.contains("Chapter 11") { 8 } else { 1 + (t.record_id.len() % 3) as u8 };
            LlmResponseRecord::from_response(&t.record_id, format!("Assessment follows.\nSCORE: {score}"))
        })
        .collect();
    let replay = root.join("replay.jsonl");
    write_jsonl(&replay, &canned).map_err(|e| e.to_string())?;

    let (a, b) = (root.join("a"), root.join("b"));
    every_stage(&cfg_path, &a, &replay)?;
    every_stage(&cfg_path, &b, &replay)?;
    let (fa, fb) = (tree_bytes(&a), tree_bytes(&b));
    ensure(fa.keys().eq(fb.keys()), || "different file sets".into())?;
    let manifests: Vec<&String> = fa.keys().filter(|k| k.contains("manifest.")).collect();
    for m in &manifests {
        ensure(fa[*m] == fb[*m], || format!("{m} differs"))?;
    }
    for (k, v) in &fa {
        ensure(v == &fb[k], || format!("{k} differs"))?;
    }
    Ok(format!("{} manifests and {} files byte-identical across reruns", manifests.len(), fa.len()))
}

fn main() {
    let checks: [(&str, fn() -> Check); 10] = [
        ("metric oracle equivalence", c1_metric_oracle),
        ("CAP/AUC identity", c2_cap_identity),
        ("recall@100 arithmetic", c3_recall_fixture),
        ("gradient checks", c4_gradients),
        ("synthetic end-to-end ordering", c5_synthetic_end_to_end),
        ("labelling and split boundaries", c6_labels_and_splits),
        ("linkage enumeration", c7_linkage),
        ("missing-value routing", c8_missing_routing),
        ("shuffle evaluation", c9_shuffle),
        ("stage determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let r = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match r {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
