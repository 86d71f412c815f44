//! Small CSV tables: the bankruptcy calendar, the deflator index, and
//! per-state filing counts.

use std::collections::BTreeMap;
use std::path::Path;

use bkpred_core::labeling::{BankruptcyCalendar, Deflator};
use bkpred_core::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{create, fmt_f64, open, parse_date};
use crate::error::{Error, Result};

fn data_err(path: &Path, row: usize, msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("{} row {row}: {msg}", path.display()))
}

/// Reads `company_key,bankruptcy_date`. Keys are CIKs (all digits) or
/// company names.
pub fn load_calendar(path: &Path, coverage: (NaiveDate, NaiveDate)) -> Result<BankruptcyCalendar> {
    let mut cal = BankruptcyCalendar::new(coverage);
    let mut rdr = csv::Reader::from_reader(open(path)?);
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let (Some(key), Some(date)) = (row.get(0), row.get(1)) else {
            return Err(data_err(path, i + 1, "expected company_key,bankruptcy_date"));
        };
        let date = parse_date(date).map_err(|e| data_err(path, i + 1, e))?;
        cal.insert(key, date).map_err(|e| data_err(path, i + 1, e))?;
    }
    Ok(cal)
}

pub fn write_calendar(path: &Path, entries: &[(String, NaiveDate)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["company_key", "bankruptcy_date"])?;
    for (k, d) in entries {
        w.write_record([k.as_str(), &d.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads `year,index`.
pub fn load_deflator(path: &Path) -> Result<Deflator> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut entries = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let year = row.get(0).and_then(|s| s.trim().parse::<i32>().ok());
        let index = row.get(1).and_then(|s| s.trim().parse::<f64>().ok());
        match (year, index) {
            (Some(y), Some(v)) => entries.push((y, v)),
            _ => return Err(data_err(path, i + 1, "expected year,index")),
        }
    }
    Ok(Deflator::new(entries)?)
}

pub fn write_deflator(path: &Path, deflator: &Deflator) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["year", "index"])?;
    for (y, v) in deflator.entries() {
        w.write_record([y.to_string(), fmt_f64(v)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct StateRow {
    state: String,
    count: u64,
}

pub fn write_state_counts(path: &Path, counts: &BTreeMap<String, u64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["state", "count"])?;
    for (s, c) in counts {
        w.serialize(StateRow { state: s.clone(), count: *c })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calendar_and_deflator_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cal.csv");
        let d = NaiveDate::from_ymd_opt(2009, 6, 1).unwrap();
        write_calendar(&p, &[("000123".into(), d), ("Acme Inc.".into(), d)]).unwrap();
        let cal = load_calendar(&p, BankruptcyCalendar::default_coverage()).unwrap();
        assert_eq!(cal.dates("123"), [d]);
        assert_eq!(cal.dates("ACME"), [d]);

        let q = dir.path().join("cpi.csv");
        write_deflator(&q, &Deflator::cpi_u()).unwrap();
        assert_eq!(load_deflator(&q).unwrap(), Deflator::cpi_u());
    }

    #[test]
    fn out_of_coverage_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cal.csv");
        std::fs::write(&p, "company_key,bankruptcy_date\n1,1970-01-01\n").unwrap();
        let e = load_calendar(&p, BankruptcyCalendar::default_coverage()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
