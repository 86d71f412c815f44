//! Linking filings to accounting fundamentals.
//!
//! Two records are candidates when they share a CIK (both present) or a
//! normalized company name, and their fiscal year ends are at most
//! [`MAX_GAP_DAYS`] apart. Candidates are ranked by `(gap, basis, filing index,
//! fundamentals index)` with CIK matches ahead of name matches, and accepted
//! greedily as long as neither side is already taken.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::FilingDocument;

/// Inclusive fiscal-year-end tolerance.
pub const MAX_GAP_DAYS: u32 = 7;

const CORPORATE_SUFFIXES: [&str; 6] = ["INC", "CORP", "CO", "LTD", "LLC", "PLC"];

/// Accounting mnemonics needed by the ratio features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mnemonic {
    Act,
    Lct,
    Ap,
    Sale,
    Che,
    Ch,
    At,
    Ebit,
    Dp,
    Dlc,
    Dltt,
    Invch,
    Invt,
    Lt,
    Ni,
    Oiadp,
    Re,
    Seq,
    Wcap,
}

impl Mnemonic {
    pub const ALL: [Mnemonic; 19] = [
        Self::Act,
        Self::Lct,
        Self::Ap,
        Self::Sale,
        Self::Che,
        Self::Ch,
        Self::At,
        Self::Ebit,
        Self::Dp,
        Self::Dlc,
        Self::Dltt,
        Self::Invch,
        Self::Invt,
        Self::Lt,
        Self::Ni,
        Self::Oiadp,
        Self::Re,
        Self::Seq,
        Self::Wcap,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Self::Act => "ACT",
            Self::Lct => "LCT",
            Self::Ap => "AP",
            Self::Sale => "SALE",
            Self::Che => "CHE",
            Self::Ch => "CH",
            Self::At => "AT",
            Self::Ebit => "EBIT",
            Self::Dp => "DP",
            Self::Dlc => "DLC",
            Self::Dltt => "DLTT",
            Self::Invch => "INVCH",
            Self::Invt => "INVT",
            Self::Lt => "LT",
            Self::Ni => "NI",
            Self::Oiadp => "OIADP",
            Self::Re => "RE",
            Self::Seq => "SEQ",
            Self::Wcap => "WCAP",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.code().eq_ignore_ascii_case(code))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceForm {
    Form10K,
    Other,
}

/// One fundamentals row. Absent mnemonics are missing values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundamentalsRecord {
    pub cik: Option<String>,
    pub company_name: String,
    pub fiscal_year_end: NaiveDate,
    pub source_form: SourceForm,
    pub values: BTreeMap<Mnemonic, f64>,
}

impl FundamentalsRecord {
    pub fn get(&self, m: Mnemonic) -> Option<f64> {
        self.values.get(&m).copied().filter(|v| !v.is_nan())
    }

    pub fn total_assets(&self) -> Option<f64> {
        self.get(Mnemonic::At)
    }

    /// Key `<company key>@<fiscal year end>`.
    pub fn record_id(&self) -> String {
        alloc::format!(
            "{}@{}",
            crate::corpus::company_key(self.cik.as_deref().unwrap_or(""), &self.company_name),
            self.fiscal_year_end
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatchBasis {
    Cik,
    Name,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedRecord {
    pub filing: FilingDocument,
    pub fundamentals: FundamentalsRecord,
    pub match_basis: MatchBasis,
    pub date_gap_days: u32,
}

/// Outcome of [`match_records`]. Together the three lists hold every input
/// record exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub linked: Vec<LinkedRecord>,
    pub unmatched_filings: Vec<FilingDocument>,
    pub unmatched_fundamentals: Vec<FundamentalsRecord>,
}

/// Uppercases, removes punctuation, collapses whitespace and drops trailing
/// corporate suffix tokens (`INC`, `CORP`, `CO`, `LTD`, `LLC`, `PLC`).
pub fn normalize_name(name: &str) -> String {
    let mut cleaned = String::with_capacity(name.len());
    for c in name.chars() {
        if c.is_alphanumeric() {
            cleaned.extend(c.to_uppercase());
        } else if c.is_whitespace() {
            cleaned.push(' ');
        }
    }
    let mut tokens: Vec<&str> = cleaned.split_whitespace().collect();
    while tokens.last().is_some_and(|t| CORPORATE_SUFFIXES.contains(t)) {
        tokens.pop();
    }
    tokens.join(" ")
}

/// CIK with surrounding whitespace and leading zeros removed; `None` when
/// nothing (or only zeros) remains.
pub fn normalize_cik(cik: &str) -> Option<String> {
    let c = cik.trim().trim_start_matches('0');
    (!c.is_empty()).then(|| String::from(c))
}

/// Keeps only records sourced from a Form 10-K, preserving order.
pub fn filter_fundamentals<I>(records: I) -> impl Iterator<Item = FundamentalsRecord>
where
    I: IntoIterator<Item = FundamentalsRecord>,
{
    records.into_iter().filter(|r| r.source_form == SourceForm::Form10K)
}

/// The identity part of a record that matching looks at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkKey {
    pub cik: Option<String>,
    pub name: String,
    pub fiscal_year_end: NaiveDate,
}

impl LinkKey {
    pub fn new(cik: Option<&str>, name: &str, fiscal_year_end: NaiveDate) -> Self {
        Self { cik: cik.and_then(normalize_cik), name: normalize_name(name), fiscal_year_end }
    }

    pub fn of_filing(f: &FilingDocument) -> Self {
        Self::new(Some(&f.cik), &f.company_name, f.fiscal_year_end)
    }

    pub fn of_fundamentals(r: &FundamentalsRecord) -> Self {
        Self::new(r.cik.as_deref(), &r.company_name, r.fiscal_year_end)
    }
}

/// An accepted `(filing index, fundamentals index)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pairing {
    pub filing: usize,
    pub fundamentals: usize,
    pub basis: MatchBasis,
    pub gap_days: u32,
}

/// Basis and gap for a pair, or `None` when the pair is not a candidate.
pub fn candidate(a: &LinkKey, b: &LinkKey) -> Option<(MatchBasis, u32)> {
    let gap = (a.fiscal_year_end - b.fiscal_year_end).num_days().unsigned_abs();
    if gap > u64::from(MAX_GAP_DAYS) {
        return None;
    }
    let basis = match (&a.cik, &b.cik) {
        (Some(x), Some(y)) if x == y => MatchBasis::Cik,
        _ if !a.name.is_empty() && a.name == b.name => MatchBasis::Name,
        _ => return None,
    };
    Some((basis, gap as u32))
}

/// Greedy one-to-one assignment on link keys. Pairings come back sorted by
/// filing index.
pub fn match_keys(filings: &[LinkKey], fundamentals: &[LinkKey]) -> Vec<Pairing> {
    let mut by_cik: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut by_name: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (j, k) in fundamentals.iter().enumerate() {
        if let Some(c) = &k.cik {
            by_cik.entry(c.as_str()).or_default().push(j);
        }
        if !k.name.is_empty() {
            by_name.entry(k.name.as_str()).or_default().push(j);
        }
    }

    let mut cands: Vec<Pairing> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for (i, f) in filings.iter().enumerate() {
        seen.clear();
        let from_cik = f.cik.as_deref().and_then(|c| by_cik.get(c)).into_iter().flatten();
        let from_name = by_name.get(f.name.as_str()).into_iter().flatten();
        for &j in from_cik.chain(from_name) {
            if seen.contains(&j) {
                continue;
            }
            seen.push(j);
            if let Some((basis, gap_days)) = candidate(f, &fundamentals[j]) {
                cands.push(Pairing { filing: i, fundamentals: j, basis, gap_days });
            }
        }
    }
    cands.sort_by_key(|p| (p.gap_days, p.basis, p.filing, p.fundamentals));

    let mut filing_used = alloc::vec![false; filings.len()];
    let mut fund_used = alloc::vec![false; fundamentals.len()];
    let mut out = Vec::new();
    for p in cands {
        if !filing_used[p.filing] && !fund_used[p.fundamentals] {
            filing_used[p.filing] = true;
            fund_used[p.fundamentals] = true;
            out.push(p);
        }
    }
    out.sort_by_key(|p| p.filing);
    out
}

/// Links filings to fundamentals and partitions the leftovers.
pub fn match_records(filings: Vec<FilingDocument>, fundamentals: Vec<FundamentalsRecord>) -> MatchOutcome {
    let fk: Vec<LinkKey> = filings.iter().map(LinkKey::of_filing).collect();
    let gk: Vec<LinkKey> = fundamentals.iter().map(LinkKey::of_fundamentals).collect();
    let pairs = match_keys(&fk, &gk);

    let mut filings: Vec<Option<FilingDocument>> = filings.into_iter().map(Some).collect();
    let mut fundamentals: Vec<Option<FundamentalsRecord>> = fundamentals.into_iter().map(Some).collect();
    let linked = pairs
        .iter()
        .map(|p| LinkedRecord {
            filing: filings[p.filing].take().expect("filing linked twice"),
            fundamentals: fundamentals[p.fundamentals].take().expect("fundamentals linked twice"),
            match_basis: p.basis,
            date_gap_days: p.gap_days,
        })
        .collect();
    MatchOutcome {
        linked,
        unmatched_filings: filings.into_iter().flatten().collect(),
        unmatched_fundamentals: fundamentals.into_iter().flatten().collect(),
    }
}
