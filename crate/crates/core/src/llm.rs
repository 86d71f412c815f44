//! Prompting a chat model for an MD&A summary plus a 1-10 distress score,
//! parsing its replies, and evaluating scores that contain many ties.
//!
//! Network transport lives in the `bkpred` crate; everything here is pure.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{evaluate, EvalError, DEFAULT_K};

/// Placeholder replaced by the MD&A text.
pub const MDNA_PLACEHOLDER: &str = "{mdna}";

/// Rough size of one token in characters, used for budgeting.
pub const CHARS_PER_TOKEN: usize = 4;

pub const DEFAULT_TEMPLATE: &str = "You are a financial analyst reading the Management's Discussion and Analysis \
section of a company's annual report.\n\n\
1. Write a one-paragraph summary of the text below. Concentrate on what it says about the company's \
financial health: liquidity, debt, losses, covenant breaches, going-concern doubts and restructuring plans.\n\
2. Rate how likely it is that the company files for bankruptcy within the next year, on a scale from \
1 (very unlikely) to 10 (almost certain).\n\n\
End your answer with a final line of the exact form `SCORE: <n>` where <n> is an integer from 1 to 10.\n\n\
Text:\n{mdna}\n";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("template has no {{mdna}} placeholder")]
    MissingPlaceholder,
    #[error("MD&A text is empty")]
    EmptyText,
    #[error("template alone needs {needed} characters but the budget is {budget}")]
    TemplateTooLong { needed: usize, budget: usize },
    #[error("no record carries a score")]
    NoScoredRecords,
    #[error("{0} records but {1} labels")]
    Length(usize, usize),
    #[error("n_shuffles must be at least 1")]
    NoShuffles,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Substitutes `mdna` into `template`, cutting the text from the end so the
/// whole prompt stays within `max_tokens * CHARS_PER_TOKEN` characters.
pub fn build_prompt(template: &str, mdna: &str, max_tokens: usize) -> Result<String, LlmError> {
    if !template.contains(MDNA_PLACEHOLDER) {
        return Err(LlmError::MissingPlaceholder);
    }
    let mdna = mdna.trim();
    if mdna.is_empty() {
        return Err(LlmError::EmptyText);
    }
    let budget = max_tokens.saturating_mul(CHARS_PER_TOKEN);
    let fixed = template.chars().count() - MDNA_PLACEHOLDER.chars().count();
    if fixed >= budget {
        return Err(LlmError::TemplateTooLong { needed: fixed + 1, budget });
    }
    let room = budget - fixed;
    let text = match mdna.char_indices().nth(room) {
        Some((cut, _)) => &mdna[..cut],
        None => mdna,
    };
    Ok(template.replacen(MDNA_PLACEHOLDER, text, 1))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedResponse {
    pub summary: String,
    pub score: Option<u8>,
}

fn valid_score(digits: &str) -> Option<u8> {
    let v: u32 = digits.parse().ok()?;
    (1..=10).contains(&v).then_some(v as u8)
}

/// `SCORE: n` (any case, optional markdown emphasis), with the raw integer text.
fn trailer(line: &str) -> Option<&str> {
    let t = line.trim().trim_matches(|c| c == '*' || c == '`' || c == '_').trim();
    if t.len() < 6 || !t[..5].eq_ignore_ascii_case("score") {
        return None;
    }
    let rest = t[5..].trim_start();
    let rest = rest.strip_prefix(':')?.trim().trim_matches(|c| c == '*' || c == '`' || c == '_').trim();
    let rest = rest.split('/').next().unwrap_or(rest).trim();
    (!rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit())).then_some(rest)
}

/// First integer after a standalone "score" word, within the same sentence.
fn fallback_score(raw: &str) -> Option<u8> {
    let lower = raw.to_ascii_lowercase();
    let bytes = lower.as_bytes();
    let mut from = 0;
    while let Some(pos) = lower[from..].find("score") {
        let start = from + pos;
        from = start + 5;
        if start > 0 && bytes[start - 1].is_ascii_alphanumeric() {
            continue;
        }
        let mut i = start + 5;
        while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
            i += 1; // "scored", "scores"
        }
        while i < bytes.len() {
            let b = bytes[i];
            if b == b'\n' || (b == b'.' && bytes.get(i + 1).map_or(true, |n| !n.is_ascii_digit())) {
                break;
            }
            if b.is_ascii_digit() {
                let end = (i..bytes.len()).find(|&j| !bytes[j].is_ascii_digit()).unwrap_or(bytes.len());
                let decimal = bytes.get(end) == Some(&b'.') && bytes.get(end + 1).is_some_and(|n| n.is_ascii_digit());
                let glued = i > 0 && bytes[i - 1].is_ascii_alphabetic();
                if !decimal && !glued {
                    if let Some(s) = valid_score(&lower[i..end]) {
                        return Some(s);
                    }
                }
                break;
            }
            i += 1;
        }
    }
    None
}

/// Extracts the score, preferring a `SCORE: n` trailer line. The summary is
/// the response without trailer lines.
pub fn parse_response(raw: &str) -> ParsedResponse {
    let mut score = None;
    let mut kept = Vec::new();
    for line in raw.lines() {
        match trailer(line) {
            Some(digits) => {
                if score.is_none() {
                    score = valid_score(digits);
                }
            }
            None => kept.push(line),
        }
    }
    if score.is_none() {
        score = fallback_score(raw);
    }
    ParsedResponse { summary: kept.join("\n").trim().into(), score }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionStatus {
    Ok,
    NoScore,
    TransportError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResponseRecord {
    pub record_id: String,
    pub summary: String,
    pub score: Option<u8>,
    pub raw_response: String,
    pub extraction_status: ExtractionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl LlmResponseRecord {
    pub fn from_response(record_id: impl Into<String>, raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let p = parse_response(&raw);
        Self {
            record_id: record_id.into(),
            summary: p.summary,
            extraction_status: if p.score.is_some() { ExtractionStatus::Ok } else { ExtractionStatus::NoScore },
            score: p.score,
            raw_response: raw,
            error: None,
        }
    }

    pub fn transport_error(record_id: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            record_id: record_id.into(),
            summary: String::new(),
            score: None,
            raw_response: String::new(),
            extraction_status: ExtractionStatus::TransportError,
            error: Some(message.into()),
        }
    }
}

/// Share of records with an extracted score.
pub fn coverage(records: &[LlmResponseRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.extraction_status == ExtractionStatus::Ok).count() as f64 / records.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsentScore {
    /// Leave unscored records out of the ranking.
    #[default]
    Exclude,
    /// Rank unscored records below every scored one, shuffled among themselves.
    LowestRank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShuffleConfig {
    pub n_shuffles: usize,
    pub seed: u64,
    pub k: usize,
    pub absent: AbsentScore,
}

impl Default for ShuffleConfig {
    fn default() -> Self {
        Self { n_shuffles: 50, seed: 0, k: DEFAULT_K, absent: AbsentScore::Exclude }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Population standard deviation over the shuffles.
    pub std: f64,
}

impl MetricSummary {
    fn of(values: &[f64]) -> Self {
        let first = values[0];
        if values.iter().all(|&v| v == first) {
            return Self { mean: first, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: libm::sqrt(var) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuffleEvalResult {
    pub roc_auc: MetricSummary,
    pub ap: MetricSummary,
    pub recall_at_k: MetricSummary,
    pub cap_ratio: MetricSummary,
    pub n_shuffles: usize,
    pub seed: u64,
    pub k: usize,
    pub n_ranked: usize,
    pub n_excluded: usize,
}

/// Evaluates integer scores many times, each time ordering tied records at
/// random, and summarizes every metric by its mean and spread.
pub fn shuffle_eval(scores: &[Option<u8>], labels: &[bool], cfg: &ShuffleConfig) -> Result<ShuffleEvalResult, LlmError> {
    if scores.len() != labels.len() {
        return Err(LlmError::Length(scores.len(), labels.len()));
    }
    if cfg.n_shuffles == 0 {
        return Err(LlmError::NoShuffles);
    }
    if scores.iter().all(Option::is_none) {
        return Err(LlmError::NoScoredRecords);
    }
    let (keys, y): (Vec<u8>, Vec<bool>) = scores
        .iter()
        .zip(labels)
        .filter_map(|(s, &l)| match (s, cfg.absent) {
            (Some(v), _) => Some((*v, l)),
            (None, AbsentScore::LowestRank) => Some((0, l)),
            (None, AbsentScore::Exclude) => None,
        })
        .unzip();
    let n = keys.len();
    let k = cfg.k.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut tiebreak = alloc::vec![0u64; n];
    let mut rank_scores = alloc::vec![0.0; n];
    let mut m: [Vec<f64>; 4] = Default::default();
    for _ in 0..cfg.n_shuffles {
        tiebreak.iter_mut().for_each(|t| *t = rng.gen());
        order.sort_by(|&a, &b| keys[b].cmp(&keys[a]).then(tiebreak[a].cmp(&tiebreak[b])).then(a.cmp(&b)));
        for (pos, &i) in order.iter().enumerate() {
            rank_scores[i] = (n - pos) as f64;
        }
        let r = evaluate(&rank_scores, &y, k)?;
        m[0].push(r.roc_auc);
        m[1].push(r.ap);
        m[2].push(r.recall_at_k);
        m[3].push(r.cap_ratio);
    }
    Ok(ShuffleEvalResult {
        roc_auc: MetricSummary::of(&m[0]),
        ap: MetricSummary::of(&m[1]),
        recall_at_k: MetricSummary::of(&m[2]),
        cap_ratio: MetricSummary::of(&m[3]),
        n_shuffles: cfg.n_shuffles,
        seed: cfg.seed,
        k,
        n_ranked: n,
        n_excluded: scores.len() - n,
    })
}

/// Every positive plus an equally large seeded sample of negatives, as
/// sorted row indices.
pub fn balanced_sample(labels: &[bool], seed: u64) -> Vec<usize> {
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    neg.shuffle(&mut rng);
    neg.truncate(pos.len());
    pos.extend(neg);
    pos.sort_unstable();
    pos
}

/// `m` distinct row indices out of `n`, seeded, sorted.
pub fn random_sample(n: usize, m: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = rand::seq::index::sample(&mut rng, n, m.min(n)).into_vec();
    idx.sort_unstable();
    idx
}

/// One-line description of a shuffle result, for logs.
pub fn describe(r: &ShuffleEvalResult) -> String {
    format!(
        "roc_auc {:.3} ({:.3}) ap {:.3} ({:.3}) recall@{} {:.3} ({:.3}) cap {:.3} ({:.3}) over {} shuffles",
        r.roc_auc.mean, r.roc_auc.std, r.ap.mean, r.ap.std, r.k, r.recall_at_k.mean, r.recall_at_k.std, r.cap_ratio.mean, r.cap_ratio.std, r.n_shuffles
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prompt_budget() {
        let p = build_prompt(DEFAULT_TEMPLATE, "Sales fell.", 2000).unwrap();
        assert!(p.contains("Sales fell.") && p.contains("SCORE: <n>") && p.contains("summary"));
        assert_eq!(p, build_prompt(DEFAULT_TEMPLATE, "Sales fell.", 2000).unwrap());
        let long = "word ".repeat(5000);
        let p = build_prompt(DEFAULT_TEMPLATE, &long, 400).unwrap();
        assert_eq!(p.chars().count(), 1600);
        assert!(matches!(build_prompt(DEFAULT_TEMPLATE, "x", 10), Err(LlmError::TemplateTooLong { .. })));
        assert_eq!(build_prompt("no slot", "x", 10), Err(LlmError::MissingPlaceholder));
        assert_eq!(build_prompt(DEFAULT_TEMPLATE, "  ", 2000), Err(LlmError::EmptyText));
    }

    #[test]
    fn parsing() {
        let p = parse_response("Liquidity is tight in a risky year.\nSCORE: 7");
        assert_eq!(p.score, Some(7));
        assert_eq!(p.summary, "Liquidity is tight in a risky year.");
        assert_eq!(parse_response("No opinion at all.").score, None);
        assert_eq!(parse_response("I would give a score of 10 out of 10.").score, Some(10));
        assert_eq!(parse_response("Summary.\n**Score:** 3/10").score, Some(3));
        assert_eq!(parse_response("Summary.\nSCORE: 11").score, None);
        assert_eq!(parse_response("A score of 7.5 seems fair.").score, None);
        assert_eq!(parse_response("It scores 2 overall.").score, Some(2));
        assert_eq!(parse_response("Underscore 5.").score, None);
    }

    #[test]
    fn records() {
        let r = LlmResponseRecord::from_response("a", "Fine.\nSCORE: 2");
        assert_eq!((r.score, r.extraction_status), (Some(2), ExtractionStatus::Ok));
        let r2 = LlmResponseRecord::from_response("b", "Fine.");
        assert_eq!(r2.extraction_status, ExtractionStatus::NoScore);
        let r3 = LlmResponseRecord::transport_error("c", "timeout");
        assert!((coverage(&[r, r2, r3]) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn distinct_scores_have_no_spread() {
        let scores = [Some(9), Some(7), Some(5), Some(3), None];
        let labels = [true, false, true, false, true];
        let r = shuffle_eval(&scores, &labels, &ShuffleConfig::default()).unwrap();
        assert_eq!(r.roc_auc, MetricSummary { mean: 0.75, std: 0.0 });
        assert_eq!(r.n_excluded, 1);
        let low = ShuffleConfig { absent: AbsentScore::LowestRank, ..ShuffleConfig::default() };
        assert_eq!(shuffle_eval(&scores, &labels, &low).unwrap().n_ranked, 5);
        assert_eq!(shuffle_eval(&[None], &[true], &ShuffleConfig::default()), Err(LlmError::NoScoredRecords));
    }

    #[test]
    fn samplers() {
        let y: Vec<bool> = (0..100).map(|i| i % 10 == 0).collect();
        let s = balanced_sample(&y, 1);
        assert_eq!(s.len(), 20);
        assert_eq!(s.iter().filter(|&&i| y[i]).count(), 10);
        assert_eq!(s, balanced_sample(&y, 1));
        let r = random_sample(100, 30, 2);
        assert_eq!(r.len(), 30);
        assert!(r.windows(2).all(|w| w[0] < w[1]));
    }
}
