//! 10-K filings: item segmentation, SIC divisions and corpus statistics.
//!
//! Segmentation is line-oriented. A header is a line whose first word is
//! `item` (any case) followed by an item number 1..=15 and then a delimiter
//! (`.`, `:`, `-`, en/em dash), whitespace or end of line. Lettered sub-items
//! (`Item 7A`) are not boundaries, so their text stays inside the parent item.
//! Each matched header owns the text up to the next matched header. When the
//! same item number is matched more than once (table of contents and body),
//! the occurrence owning the longest span wins, later occurrences winning ties.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{Datelike, Months, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linkage::normalize_name;

pub const N_ITEMS: usize = 15;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("malformed metadata: {0}")]
    MalformedMetadata(String),
}

/// Text of items 1..=15. Items that were not found are empty strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Items(Vec<String>);

impl Default for Items {
    fn default() -> Self {
        Self(alloc::vec![String::new(); N_ITEMS])
    }
}

impl TryFrom<Vec<String>> for Items {
    type Error = String;

    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        if v.len() == N_ITEMS {
            Ok(Self(v))
        } else {
            Err(alloc::format!("expected {N_ITEMS} items, got {}", v.len()))
        }
    }
}

impl From<Items> for Vec<String> {
    fn from(items: Items) -> Self {
        items.0
    }
}

impl Items {
    /// Panics unless `1 <= item <= 15`.
    pub fn get(&self, item: u8) -> &str {
        &self.0[Self::slot(item)]
    }

    pub fn set(&mut self, item: u8, text: String) {
        self.0[Self::slot(item)] = text;
    }

    /// `(item number, text)` in item order.
    pub fn iter(&self) -> impl Iterator<Item = (u8, &str)> {
        self.0.iter().enumerate().map(|(i, t)| (i as u8 + 1, t.as_str()))
    }

    pub fn word_count(&self) -> u64 {
        self.0.iter().map(|t| word_count(t)).sum()
    }

    fn slot(item: u8) -> usize {
        assert!((1..=N_ITEMS as u8).contains(&item), "item {item} out of range 1..=15");
        usize::from(item - 1)
    }
}

/// Number of maximal whitespace-delimited tokens.
pub fn word_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// Identity and dates of a filing, as delivered alongside its text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilingMetadata {
    pub cik: String,
    pub company_name: String,
    pub filing_date: NaiveDate,
    pub fiscal_year_end: NaiveDate,
    pub sic_code: Option<u16>,
    pub state: Option<String>,
}

/// One parsed 10-K.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilingDocument {
    pub cik: String,
    pub company_name: String,
    pub filing_date: NaiveDate,
    pub fiscal_year_end: NaiveDate,
    pub sic_code: Option<u16>,
    /// Two-letter headquarters state, when known.
    pub state: Option<String>,
    pub items: Items,
    pub total_words: u64,
}

impl FilingDocument {
    /// Builds a document from already segmented items.
    pub fn from_items(meta: FilingMetadata, items: Items) -> Result<Self, CorpusError> {
        validate(&meta)?;
        let total_words = items.word_count();
        Ok(Self {
            cik: meta.cik,
            company_name: meta.company_name,
            filing_date: meta.filing_date,
            fiscal_year_end: meta.fiscal_year_end,
            sic_code: meta.sic_code,
            state: meta.state,
            items,
            total_words,
        })
    }

    pub fn metadata(&self) -> FilingMetadata {
        FilingMetadata {
            cik: self.cik.clone(),
            company_name: self.company_name.clone(),
            filing_date: self.filing_date,
            fiscal_year_end: self.fiscal_year_end,
            sic_code: self.sic_code,
            state: self.state.clone(),
        }
    }

    /// The one-year reporting period ending on the fiscal year end.
    pub fn period_covered(&self) -> (NaiveDate, NaiveDate) {
        let start = self
            .fiscal_year_end
            .checked_sub_months(Months::new(12))
            .unwrap_or(NaiveDate::MIN);
        (start, self.fiscal_year_end)
    }

    /// Company key: CIK without leading zeros, or the normalized name when the
    /// CIK is absent.
    pub fn company_key(&self) -> String {
        company_key(&self.cik, &self.company_name)
    }

    /// Record identifier `<company key>@<filing date>`.
    pub fn record_id(&self) -> String {
        alloc::format!("{}@{}", self.company_key(), self.filing_date)
    }
}

pub(crate) fn company_key(cik: &str, name: &str) -> String {
    match crate::linkage::normalize_cik(cik) {
        Some(c) => c,
        None => normalize_name(name),
    }
}

fn validate(meta: &FilingMetadata) -> Result<(), CorpusError> {
    if meta.filing_date < meta.fiscal_year_end {
        return Err(CorpusError::MalformedMetadata(alloc::format!(
            "filing date {} precedes fiscal year end {}",
            meta.filing_date, meta.fiscal_year_end
        )));
    }
    if let Some(sic) = meta.sic_code {
        if sic > 9999 {
            return Err(CorpusError::MalformedMetadata(alloc::format!("SIC code {sic} has more than 4 digits")));
        }
    }
    Ok(())
}

/// Segments raw filing text into items and attaches the metadata.
///
/// Never fails on the text itself: unrecognizable text yields all-empty items.
pub fn parse_filing(raw_text: &str, meta: FilingMetadata) -> Result<FilingDocument, CorpusError> {
    FilingDocument::from_items(meta, segment_items(raw_text))
}

/// A matched item header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ItemHeader {
    pub item: u8,
    /// Byte offset of the line holding the header.
    pub line_start: usize,
    /// Byte offset where the item text begins.
    pub content_start: usize,
}

/// All item headers in document order.
pub fn find_item_headers(text: &str) -> Vec<ItemHeader> {
    let mut out = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if let Some((item, consumed)) = match_header(line) {
            out.push(ItemHeader { item, line_start: offset, content_start: offset + consumed });
        }
        offset += line.len();
    }
    out
}

/// Splits text into items 1..=15 following the module-level rules.
pub fn segment_items(text: &str) -> Items {
    let headers = find_item_headers(text);
    // (span length, header index) of the winning occurrence per item
    let mut best: [Option<(usize, usize)>; N_ITEMS] = [None; N_ITEMS];
    for (k, h) in headers.iter().enumerate() {
        let end = headers.get(k + 1).map_or(text.len(), |n| n.line_start);
        let span = end.saturating_sub(h.content_start);
        let slot = &mut best[usize::from(h.item - 1)];
        if slot.map_or(true, |(len, _)| span >= len) {
            *slot = Some((span, k));
        }
    }
    let mut items = Items::default();
    for (i, b) in best.iter().enumerate() {
        if let Some((_, k)) = *b {
            let h = headers[k];
            let end = headers.get(k + 1).map_or(text.len(), |n| n.line_start);
            let body = text.get(h.content_start..end).unwrap_or("").trim();
            items.set(i as u8 + 1, String::from(body));
        }
    }
    items
}

/// Returns `(item number, bytes consumed up to the item text)` when `line`
/// starts with an item header.
fn match_header(line: &str) -> Option<(u8, usize)> {
    let lead = line.len() - line.trim_start().len();
    let rest = &line[lead..];
    let word = rest.get(..4)?;
    if !word.eq_ignore_ascii_case("item") {
        return None;
    }
    let after_word = &rest[4..];
    let gap = after_word.len() - after_word.trim_start_matches([' ', '\t', '\u{a0}']).len();
    if gap == 0 {
        return None;
    }
    let num_part = &after_word[gap..];
    let digits = num_part.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 || digits > 2 {
        return None;
    }
    let number: u8 = num_part[..digits].parse().ok()?;
    if !(1..=N_ITEMS as u8).contains(&number) {
        return None;
    }
    let mut tail = &num_part[digits..];
    let mut sub_item = false;
    if let Some(c) = tail.chars().next() {
        if c.is_ascii_alphabetic() {
            let after = &tail[1..];
            if !at_boundary(after) {
                return None;
            }
            sub_item = true;
            tail = after;
        }
    }
    if !at_boundary(tail) || sub_item {
        return None;
    }
    let trimmed = tail.trim_start_matches([' ', '\t', '\u{a0}']);
    let trimmed = trimmed
        .strip_prefix(['.', ':', '-', '\u{2013}', '\u{2014}'])
        .unwrap_or(trimmed);
    Some((number, line.len() - trimmed.len()))
}

fn at_boundary(s: &str) -> bool {
    match s.chars().next() {
        None => true,
        Some(c) => c.is_whitespace() || matches!(c, '.' | ':' | '-' | '\u{2013}' | '\u{2014}'),
    }
}

/// Top-level SIC divisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SicDivision {
    AgricultureForestryFishing,
    Mining,
    Construction,
    Manufacturing,
    TransportationPublicUtilities,
    WholesaleTrade,
    RetailTrade,
    FinanceInsuranceRealEstate,
    Services,
    PublicAdministration,
    Unclassified,
}

impl SicDivision {
    pub const ALL: [SicDivision; 11] = [
        Self::AgricultureForestryFishing,
        Self::Mining,
        Self::Construction,
        Self::Manufacturing,
        Self::TransportationPublicUtilities,
        Self::WholesaleTrade,
        Self::RetailTrade,
        Self::FinanceInsuranceRealEstate,
        Self::Services,
        Self::PublicAdministration,
        Self::Unclassified,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::AgricultureForestryFishing => "Agriculture, Forestry, Fishing",
            Self::Mining => "Mining",
            Self::Construction => "Construction",
            Self::Manufacturing => "Manufacturing",
            Self::TransportationPublicUtilities => "Transportation & Public Utilities",
            Self::WholesaleTrade => "Wholesale Trade",
            Self::RetailTrade => "Retail Trade",
            Self::FinanceInsuranceRealEstate => "Finance, Insurance, Real Estate",
            Self::Services => "Services",
            Self::PublicAdministration => "Public Administration",
            Self::Unclassified => "Unclassified",
        }
    }
}

/// Maps a 4-digit SIC code to its division. Codes outside every division
/// range (including anything above 9999) are `Unclassified`.
pub fn sic_division(sic_code: u16) -> SicDivision {
    use SicDivision::*;
    match sic_code {
        100..=999 => AgricultureForestryFishing,
        1000..=1499 => Mining,
        1500..=1799 => Construction,
        2000..=3999 => Manufacturing,
        4000..=4999 => TransportationPublicUtilities,
        5000..=5199 => WholesaleTrade,
        5200..=5999 => RetailTrade,
        6000..=6799 => FinanceInsuranceRealEstate,
        7000..=8999 => Services,
        9100..=9999 => PublicAdministration,
        _ => Unclassified,
    }
}

/// Aggregate corpus statistics. Means are `None` for an empty corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_filings: u64,
    pub n_companies: u64,
    pub mean_years_per_company: Option<f64>,
    pub mean_words_per_filing: Option<f64>,
    /// Keyed by item number; empty for an empty corpus.
    pub mean_words_per_item: BTreeMap<u8, f64>,
    /// Share of companies per division, over companies with a SIC code.
    pub sic_division_distribution: BTreeMap<SicDivision, f64>,
    /// Companies per headquarters state.
    pub state_counts: BTreeMap<String, u64>,
}

#[derive(Debug, Default)]
struct CompanyAcc {
    years: BTreeSet<i32>,
    sic: Option<u16>,
    state: Option<String>,
}

/// Single-pass accumulator behind [`corpus_stats`]. Memory grows with the
/// number of companies, not the number of filings.
#[derive(Debug, Default)]
pub struct CorpusStatsBuilder {
    n_filings: u64,
    total_words: u64,
    item_words: [u64; N_ITEMS],
    companies: BTreeMap<String, CompanyAcc>,
}

impl CorpusStatsBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, doc: &FilingDocument) {
        self.n_filings += 1;
        for (i, text) in doc.items.iter() {
            let w = word_count(text);
            self.item_words[usize::from(i - 1)] += w;
            self.total_words += w;
        }
        let acc = self.companies.entry(doc.company_key()).or_default();
        acc.years.insert(doc.fiscal_year_end.year());
        if acc.sic.is_none() {
            acc.sic = doc.sic_code;
        }
        if acc.state.is_none() {
            acc.state = doc.state.clone();
        }
    }

    pub fn finish(self) -> CorpusStats {
        let n = self.n_filings;
        let n_companies = self.companies.len() as u64;
        let mean = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        let mean_words_per_item = if n == 0 {
            BTreeMap::new()
        } else {
            (1..=N_ITEMS as u8)
                .map(|i| (i, self.item_words[usize::from(i - 1)] as f64 / n as f64))
                .collect()
        };
        let company_years: u64 = self.companies.values().map(|c| c.years.len() as u64).sum();

        let mut division_counts: BTreeMap<SicDivision, u64> = BTreeMap::new();
        let mut state_counts: BTreeMap<String, u64> = BTreeMap::new();
        for c in self.companies.values() {
            if let Some(sic) = c.sic {
                *division_counts.entry(sic_division(sic)).or_default() += 1;
            }
            if let Some(s) = &c.state {
                *state_counts.entry(s.clone()).or_default() += 1;
            }
        }
        let with_sic: u64 = division_counts.values().sum();
        let sic_division_distribution = division_counts
            .into_iter()
            .map(|(d, k)| (d, k as f64 / with_sic as f64))
            .collect();

        CorpusStats {
            n_filings: n,
            n_companies,
            mean_years_per_company: mean(company_years, n_companies),
            mean_words_per_filing: mean(self.total_words, n),
            mean_words_per_item,
            sic_division_distribution,
            state_counts,
        }
    }
}

pub fn corpus_stats<'a, I>(corpus: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a FilingDocument>,
{
    let mut b = CorpusStatsBuilder::new();
    for doc in corpus {
        b.push(doc);
    }
    b.finish()
}
