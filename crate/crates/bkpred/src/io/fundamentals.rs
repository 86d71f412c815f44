//! Fundamentals CSV: `cik`, `company_name`, `fiscal_year_end`, `source_form`
//! and one column per accounting mnemonic. Column names are matched
//! case-insensitively; other columns are ignored. Empty cells are missing.

use std::collections::BTreeMap;
use std::path::Path;

use bkpred_core::linkage::{FundamentalsRecord, Mnemonic, SourceForm};

use super::{fmt_f64, open, parse_date, parse_f64, SkipReport};
use crate::error::{Error, Result};

/// `10-K`, `10K`, `Form 10-K` (any case) are Form 10-K; anything else is not.
pub fn parse_source_form(s: &str) -> SourceForm {
    let t: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_uppercase();
    if t == "10K" || t == "FORM10K" {
        SourceForm::Form10K
    } else {
        SourceForm::Other
    }
}

struct Columns {
    cik: Option<usize>,
    name: usize,
    fye: usize,
    form: usize,
    mnemonics: Vec<(usize, Mnemonic)>,
}

fn columns(headers: &csv::StringRecord, path: &Path) -> Result<Columns> {
    let find = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let need = |name: &str| find(name).ok_or_else(|| Error::Data(format!("{}: no `{name}` column", path.display())));
    let mnemonics = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| Mnemonic::from_code(h.trim()).map(|m| (i, m)))
        .collect();
    Ok(Columns { cik: find("cik"), name: need("company_name")?, fye: need("fiscal_year_end")?, form: need("source_form")?, mnemonics })
}

fn parse_row(row: &csv::StringRecord, c: &Columns) -> std::result::Result<FundamentalsRecord, String> {
    let cell = |i: usize| row.get(i).unwrap_or("");
    let cik = c.cik.map(cell).map(str::trim).filter(|s| !s.is_empty()).map(String::from);
    let mut values = BTreeMap::new();
    for &(i, m) in &c.mnemonics {
        if let Some(v) = parse_f64(cell(i)).map_err(|e| format!("{}: {e}", m.code()))? {
            values.insert(m, v);
        }
    }
    Ok(FundamentalsRecord {
        cik,
        company_name: cell(c.name).trim().to_string(),
        fiscal_year_end: parse_date(cell(c.fye))?,
        source_form: parse_source_form(cell(c.form)),
        values,
    })
}

/// All rows, whatever their source form. Unparseable rows are skipped and
/// reported by data-row number.
pub fn load_fundamentals(path: &Path) -> Result<(Vec<FundamentalsRecord>, SkipReport)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(open(path)?);
    let headers = rdr.headers()?.clone();
    let cols = columns(&headers, path)?;
    let mut out = Vec::new();
    let mut report = SkipReport::default();
    for (i, row) in rdr.records().enumerate() {
        match row.map_err(|e| e.to_string()).and_then(|r| parse_row(&r, &cols)) {
            Ok(r) => {
                report.n_loaded += 1;
                out.push(r);
            }
            Err(reason) => report.skip(i + 1, reason),
        }
    }
    Ok((out, report))
}

pub fn write_fundamentals(path: &Path, records: &[FundamentalsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(super::create(path)?);
    let mut header = vec!["cik", "company_name", "fiscal_year_end", "source_form"];
    header.extend(Mnemonic::ALL.iter().map(|m| m.code()));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.cik.clone().unwrap_or_default(),
            r.company_name.clone(),
            r.fiscal_year_end.to_string(),
            match r.source_form {
                SourceForm::Form10K => "10-K".into(),
                SourceForm::Other => "other".into(),
            },
        ];
        row.extend(Mnemonic::ALL.iter().map(|m| r.values.get(m).map(|&v| fmt_f64(v)).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn form_spellings() {
        for s in ["10-K", "10k", "Form 10-K", " 10-K "] {
            assert_eq!(parse_source_form(s), SourceForm::Form10K, "{s}");
        }
        for s in ["10-Q", "10-K405", "", "20-F"] {
            assert_eq!(parse_source_form(s), SourceForm::Other, "{s}");
        }
    }

    #[test]
    fn round_trip_and_skips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        std::fs::write(
            &p,
            "cik,company_name,fiscal_year_end,source_form,at,Sale,extra\n\
             0012,Acme,2001-12-31,10-K,100.5,,x\n\
             ,Beta,2001-12-31,10-Q,1,2,y\n\
             3,Gamma,not a date,10-K,1,2,z\n\
             4,Delta,2001-12-31,10-K,abc,2,z\n",
        )
        .unwrap();
        let (recs, rep) = load_fundamentals(&p).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(rep.skipped.iter().map(|s| s.line).collect::<Vec<_>>(), [3, 4]);
        assert_eq!(recs[0].get(Mnemonic::At), Some(100.5));
        assert_eq!(recs[0].get(Mnemonic::Sale), None);
        assert_eq!(recs[1].cik, None);
        let q = dir.path().join("g.csv");
        write_fundamentals(&q, &recs).unwrap();
        assert_eq!(load_fundamentals(&q).unwrap().0, recs);
    }
}
