//! Stage outputs that refer back to input records by id: links between
//! filings and fundamentals, and labelled examples.

use std::collections::{BTreeMap, BTreeSet};

use bkpred_core::corpus::FilingDocument;
use bkpred_core::labeling::{LabelWindow, LabeledExample, Split};
use bkpred_core::linkage::{FundamentalsRecord, LinkedRecord, MatchBasis};
use bkpred_core::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One accepted match, by record id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRow {
    pub filing_id: String,
    pub fundamentals_id: String,
    pub match_basis: MatchBasis,
    pub date_gap_days: u32,
}

impl LinkRow {
    pub fn of(r: &LinkedRecord) -> Self {
        Self {
            filing_id: r.filing.record_id(),
            fundamentals_id: r.fundamentals.record_id(),
            match_basis: r.match_basis,
            date_gap_days: r.date_gap_days,
        }
    }
}

/// One labelled example with its window dates. `label` is present iff
/// `qualified`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub record_id: String,
    pub fundamentals_id: String,
    pub company_key: String,
    pub fiscal_year_end: NaiveDate,
    pub filing_date: NaiveDate,
    pub prediction_end: NaiveDate,
    pub qualified: bool,
    pub label: Option<bool>,
    pub split: Split,
    pub match_basis: MatchBasis,
    pub date_gap_days: u32,
}

impl LabeledRow {
    pub fn of(e: &LabeledExample) -> Self {
        Self {
            record_id: e.record_id(),
            fundamentals_id: e.linked.fundamentals.record_id(),
            company_key: e.linked.filing.company_key(),
            fiscal_year_end: e.window.t_pr,
            filing_date: e.window.t_fd,
            prediction_end: e.window.prediction_period().1,
            qualified: e.qualified,
            label: e.label,
            split: e.split,
            match_basis: e.linked.match_basis,
            date_gap_days: e.linked.date_gap_days,
        }
    }
}

/// Id lookup that refuses ambiguous ids.
struct Index<'a, T> {
    by_id: BTreeMap<String, &'a T>,
    dup: BTreeSet<String>,
}

impl<'a, T> Index<'a, T> {
    fn new(items: &'a [T], id: impl Fn(&T) -> String) -> Self {
        let mut by_id = BTreeMap::new();
        let mut dup = BTreeSet::new();
        for it in items {
            let k = id(it);
            if by_id.insert(k.clone(), it).is_some() {
                dup.insert(k);
            }
        }
        Self { by_id, dup }
    }

    fn get(&self, id: &str, what: &str) -> Result<&'a T> {
        if self.dup.contains(id) {
            return Err(Error::Data(format!("{what} id {id} is not unique")));
        }
        self.by_id.get(id).copied().ok_or_else(|| Error::Data(format!("unknown {what} id {id}")))
    }
}

/// Rebuilds linked records from link rows and the records they name.
pub fn resolve_links(
    links: &[LinkRow],
    filings: &[FilingDocument],
    fundamentals: &[FundamentalsRecord],
) -> Result<Vec<LinkedRecord>> {
    let fi = Index::new(filings, FilingDocument::record_id);
    let gi = Index::new(fundamentals, FundamentalsRecord::record_id);
    links
        .iter()
        .map(|l| {
            Ok(LinkedRecord {
                filing: fi.get(&l.filing_id, "filing")?.clone(),
                fundamentals: gi.get(&l.fundamentals_id, "fundamentals")?.clone(),
                match_basis: l.match_basis,
                date_gap_days: l.date_gap_days,
            })
        })
        .collect()
}

/// Rebuilds labelled examples from rows, checking that the stored window
/// agrees with the referenced filing.
pub fn resolve_labeled(
    rows: &[LabeledRow],
    filings: &[FilingDocument],
    fundamentals: &[FundamentalsRecord],
) -> Result<Vec<LabeledExample>> {
    let fi = Index::new(filings, FilingDocument::record_id);
    let gi = Index::new(fundamentals, FundamentalsRecord::record_id);
    rows.iter()
        .map(|r| {
            let filing = fi.get(&r.record_id, "filing")?.clone();
            let fundamentals = gi.get(&r.fundamentals_id, "fundamentals")?.clone();
            if filing.filing_date != r.filing_date || filing.fiscal_year_end != r.fiscal_year_end {
                return Err(Error::Data(format!("dates of {} disagree with the corpus", r.record_id)));
            }
            Ok(LabeledExample {
                window: LabelWindow { t_pr: r.fiscal_year_end, t_fd: r.filing_date },
                linked: LinkedRecord { filing, fundamentals, match_basis: r.match_basis, date_gap_days: r.date_gap_days },
                qualified: r.qualified,
                label: r.label,
                split: r.split,
            })
        })
        .collect()
}
