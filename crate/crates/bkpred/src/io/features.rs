//! Feature files: the 28 ratios per example (`ratios.csv`), a dense matrix
//! CSV, MD&A texts as JSONL, and sparse `row,col,value` triplets.

use std::path::Path;

use bkpred_core::features::{FeatureVector, FEATURE_NAMES, N_FEATURES};
use bkpred_core::labeling::Split;
use bkpred_core::matrix::{DenseMatrix, Design, SparseMatrix};
use serde::{Deserialize, Serialize};

use super::{create, fmt_f64, open, parse_f64, read_jsonl, write_jsonl};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

fn split_name(s: Split) -> &'static str {
    s.as_str()
}

fn parse_split(s: &str) -> Option<Split> {
    match s {
        "train" => Some(Split::Train),
        "validation" => Some(Split::Validation),
        "test" => Some(Split::Test),
        "none" => Some(Split::None),
        _ => None,
    }
}

/// `record_id,split,label,<28 ratio columns>`; missing ratios are empty.
pub fn write_ratios(path: &Path, ds: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["record_id", "split", "label"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)?;
    for i in 0..ds.len() {
        let mut row = vec![ds.ids[i].clone(), split_name(ds.splits[i]).into(), u8::from(ds.labels[i]).to_string()];
        row.extend(ds.ratios[i].0.iter().map(|v| v.map(fmt_f64).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct TextRow {
    record_id: String,
    text: String,
}

pub fn write_texts(path: &Path, ds: &Dataset) -> Result<()> {
    let rows: Vec<TextRow> =
        ds.ids.iter().zip(&ds.texts).map(|(id, t)| TextRow { record_id: id.clone(), text: t.clone() }).collect();
    write_jsonl(path, &rows)
}

/// Reads `ratios.csv` and the matching text file back into a dataset. Both
/// must list the same records in the same order.
pub fn read_dataset(ratios: &Path, texts: &Path) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_reader(open(ratios)?);
    let headers = rdr.headers()?.clone();
    if headers.len() != 3 + N_FEATURES || headers.iter().skip(3).ne(FEATURE_NAMES) {
        return Err(Error::Data(format!("{}: unexpected header", ratios.display())));
    }
    let mut ds = Dataset::default();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |m: String| Error::Data(format!("{} row {}: {m}", ratios.display(), i + 1));
        ds.ids.push(row[0].to_string());
        ds.splits.push(parse_split(&row[1]).ok_or_else(|| bad(format!("unknown split {:?}", &row[1])))?);
        ds.labels.push(match &row[2] {
            "1" => true,
            "0" => false,
            other => return Err(bad(format!("bad label {other:?}"))),
        });
        let mut fv = [None; N_FEATURES];
        for (k, slot) in fv.iter_mut().enumerate() {
            *slot = parse_f64(&row[3 + k]).map_err(bad)?;
        }
        ds.ratios.push(FeatureVector(fv));
    }
    let rows: Vec<TextRow> = read_jsonl(texts)?;
    if rows.len() != ds.len() || rows.iter().zip(&ds.ids).any(|(r, id)| &r.record_id != id) {
        return Err(Error::Data(format!("{} does not list the records of {}", texts.display(), ratios.display())));
    }
    ds.texts = rows.into_iter().map(|r| r.text).collect();
    Ok(ds)
}

/// `record_id,<28 columns>` of an imputed, standardized matrix.
pub fn write_dense(path: &Path, ids: &[String], x: &DenseMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["record_id"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)?;
    for (i, id) in ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(x.row(i).iter().map(|&v| fmt_f64(v)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Nonzero entries as `row,col,value`, row-major.
pub fn write_triplets(path: &Path, x: &SparseMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["row", "col", "value"])?;
    for i in 0..x.n_rows() {
        let (cols, vals) = x.row(i);
        for (c, v) in cols.iter().zip(vals) {
            w.write_record([i.to_string(), c.to_string(), fmt_f64(*v)])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
