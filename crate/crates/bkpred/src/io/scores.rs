//! `record_id,score` files, and labels joined to them by id.

use std::collections::BTreeMap;
use std::path::Path;

use super::records::LabeledRow;
use super::{create, fmt_f64, open, read_jsonl};
use crate::error::{Error, Result};

pub fn write_scores(path: &Path, ids: &[String], scores: &[f64]) -> Result<()> {
    if ids.len() != scores.len() {
        return Err(Error::Internal(format!("{} ids but {} scores", ids.len(), scores.len())));
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["record_id", "score"])?;
    for (id, s) in ids.iter().zip(scores) {
        w.write_record([id.as_str(), &fmt_f64(*s)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a score file; non-finite or unparseable scores and repeated ids are
/// data errors.
pub fn read_scores(path: &Path) -> Result<(Vec<String>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let (mut ids, mut scores) = (Vec::new(), Vec::new());
    let mut seen = std::collections::BTreeSet::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |m: &str| Error::Data(format!("{} row {}: {m}", path.display(), i + 1));
        let id = row.get(0).ok_or_else(|| bad("missing record_id"))?.trim().to_string();
        let s: f64 = row.get(1).and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad("bad score"))?;
        if !s.is_finite() {
            return Err(bad("score is not finite"));
        }
        if !seen.insert(id.clone()) {
            return Err(bad("repeated record_id"));
        }
        ids.push(id);
        scores.push(s);
    }
    Ok((ids, scores))
}

fn parse_label(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

/// Labels by record id, from labelled JSONL (qualified rows only) or a
/// `record_id,label` CSV with 0/1 or true/false labels.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, bool>> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        let rows: Vec<LabeledRow> = read_jsonl(path)?;
        return Ok(rows.into_iter().filter_map(|r| r.label.map(|l| (r.record_id, l))).collect());
    }
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let label = row.get(1).and_then(parse_label);
        match (row.get(0), label) {
            (Some(id), Some(l)) => {
                out.insert(id.trim().to_string(), l);
            }
            _ => return Err(Error::Data(format!("{} row {}: expected record_id,label", path.display(), i + 1))),
        }
    }
    Ok(out)
}

/// Scores in file order with their labels. Every scored id must be labelled.
pub fn join_labels(ids: &[String], labels: &BTreeMap<String, bool>) -> Result<Vec<bool>> {
    ids.iter()
        .map(|id| labels.get(id).copied().ok_or_else(|| Error::Data(format!("no label for record {id}"))))
        .collect()
}
