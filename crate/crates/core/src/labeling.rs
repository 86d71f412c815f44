//! Qualification, next-year bankruptcy labels and temporal splits.
//!
//! For a filing with fiscal year end `t_pr` and filing date `t_fd`, the label
//! is positive iff the company filed for bankruptcy in `(t_fd, t_fd + 1 year]`.
//! "One year" is the same calendar date one year later; Feb 29 maps to Feb 28.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{Datelike, Months, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linkage::LinkedRecord;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabelError {
    #[error("total assets (AT) missing for {0}")]
    MissingAssets(String),
    #[error("no deflator index for year {0}")]
    MissingDeflator(i32),
    #[error("filing date {filing} precedes fiscal year end {fiscal}")]
    InvertedWindow { fiscal: NaiveDate, filing: NaiveDate },
    #[error("bankruptcy date {0} outside calendar coverage")]
    OutsideCoverage(NaiveDate),
    #[error("invalid deflator index {index} for year {year}")]
    InvalidDeflator { year: i32, index: f64 },
}

/// `date` shifted by whole years on the calendar.
pub fn add_years(date: NaiveDate, years: i32) -> NaiveDate {
    let months = Months::new(12 * years.unsigned_abs());
    let shifted = if years >= 0 { date.checked_add_months(months) } else { date.checked_sub_months(months) };
    shifted.expect("date arithmetic out of range")
}

/// The dates and periods around one filing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelWindow {
    /// Fiscal year end.
    pub t_pr: NaiveDate,
    /// Filing date.
    pub t_fd: NaiveDate,
}

impl LabelWindow {
    pub fn new(t_pr: NaiveDate, t_fd: NaiveDate) -> Result<Self, LabelError> {
        if t_fd < t_pr {
            return Err(LabelError::InvertedWindow { fiscal: t_pr, filing: t_fd });
        }
        Ok(Self { t_pr, t_fd })
    }

    /// Reporting period `[t_pr - 1y, t_pr]`.
    pub fn reporting_period(&self) -> (NaiveDate, NaiveDate) {
        (add_years(self.t_pr, -1), self.t_pr)
    }

    /// Prediction window `(t_fd, t_fd + 1y]`, returned as its two endpoints.
    pub fn prediction_period(&self) -> (NaiveDate, NaiveDate) {
        (self.t_fd, add_years(self.t_fd, 1))
    }

    /// Indicator period `[t_pr - 1y, t_fd]`.
    pub fn indicator_period(&self) -> (NaiveDate, NaiveDate) {
        (add_years(self.t_pr, -1), self.t_fd)
    }

    pub fn in_prediction_period(&self, d: NaiveDate) -> bool {
        let (open, closed) = self.prediction_period();
        open < d && d <= closed
    }
}

/// Annual price index used to inflate the 1980 asset threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deflator {
    index: BTreeMap<i32, f64>,
}

/// US CPI-U, all items, annual average (1982-84 = 100).
const CPI_U: [(i32, f64); 45] = [
    (1979, 72.6),
    (1980, 82.4),
    (1981, 90.9),
    (1982, 96.5),
    (1983, 99.6),
    (1984, 103.9),
    (1985, 107.6),
    (1986, 109.6),
    (1987, 113.6),
    (1988, 118.3),
    (1989, 124.0),
    (1990, 130.7),
    (1991, 136.2),
    (1992, 140.3),
    (1993, 144.5),
    (1994, 148.2),
    (1995, 152.4),
    (1996, 156.9),
    (1997, 160.5),
    (1998, 163.0),
    (1999, 166.6),
    (2000, 172.2),
    (2001, 177.1),
    (2002, 179.9),
    (2003, 184.0),
    (2004, 188.9),
    (2005, 195.3),
    (2006, 201.6),
    (2007, 207.342),
    (2008, 215.303),
    (2009, 214.537),
    (2010, 218.056),
    (2011, 224.939),
    (2012, 229.594),
    (2013, 232.957),
    (2014, 236.736),
    (2015, 237.017),
    (2016, 240.007),
    (2017, 245.120),
    (2018, 251.107),
    (2019, 255.657),
    (2020, 258.811),
    (2021, 270.970),
    (2022, 292.655),
    (2023, 304.702),
];

impl Deflator {
    pub fn new(entries: impl IntoIterator<Item = (i32, f64)>) -> Result<Self, LabelError> {
        let mut index = BTreeMap::new();
        for (year, v) in entries {
            if !(v.is_finite() && v > 0.0) {
                return Err(LabelError::InvalidDeflator { year, index: v });
            }
            index.insert(year, v);
        }
        Ok(Self { index })
    }

    /// Bundled CPI-U table, 1979-2023.
    pub fn cpi_u() -> Self {
        Self { index: CPI_U.into_iter().collect() }
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        self.index.get(&year).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.index.iter().map(|(&y, &v)| (y, v))
    }

    /// Value of `amount` (in `base_year` money) expressed in `year` money.
    pub fn inflate(&self, amount: f64, base_year: i32, year: i32) -> Result<f64, LabelError> {
        let base = self.get(base_year).ok_or(LabelError::MissingDeflator(base_year))?;
        let cur = self.get(year).ok_or(LabelError::MissingDeflator(year))?;
        Ok(amount * cur / base)
    }
}

/// Sorted bankruptcy filing dates per company key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankruptcyCalendar {
    entries: BTreeMap<String, Vec<NaiveDate>>,
    coverage: (NaiveDate, NaiveDate),
}

impl Default for BankruptcyCalendar {
    fn default() -> Self {
        Self::new(Self::default_coverage())
    }
}

impl BankruptcyCalendar {
    pub fn default_coverage() -> (NaiveDate, NaiveDate) {
        (
            NaiveDate::from_ymd_opt(1979, 1, 1).expect("valid date"),
            NaiveDate::from_ymd_opt(2022, 12, 31).expect("valid date"),
        )
    }

    pub fn new(coverage: (NaiveDate, NaiveDate)) -> Self {
        Self { entries: BTreeMap::new(), coverage }
    }

    pub fn coverage(&self) -> (NaiveDate, NaiveDate) {
        self.coverage
    }

    /// Adds a bankruptcy date. The key may be a CIK (digits) or a company
    /// name; both are normalized the same way filings are.
    pub fn insert(&mut self, company_key: &str, date: NaiveDate) -> Result<(), LabelError> {
        if date < self.coverage.0 || date > self.coverage.1 {
            return Err(LabelError::OutsideCoverage(date));
        }
        let key = calendar_key(company_key);
        let dates = self.entries.entry(key).or_default();
        if let Err(pos) = dates.binary_search(&date) {
            dates.insert(pos, date);
        }
        Ok(())
    }

    pub fn dates(&self, company_key: &str) -> &[NaiveDate] {
        self.entries.get(company_key).map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, NaiveDate)> {
        self.entries.iter().flat_map(|(k, v)| v.iter().map(move |&d| (k.as_str(), d)))
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn calendar_key(raw: &str) -> String {
    let t = raw.trim();
    if !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit()) {
        crate::corpus::company_key(t, "")
    } else {
        crate::corpus::company_key("", t)
    }
}

/// Thresholds for inclusion in the labelled set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualifyRule {
    /// Asset threshold in 1980 dollars; assets must strictly exceed it.
    pub threshold_1980: f64,
    /// Multiplier turning the AT field into dollars (1e6 for data reported in millions).
    pub assets_scale: f64,
}

impl Default for QualifyRule {
    fn default() -> Self {
        Self { threshold_1980: 100_000_000.0, assets_scale: 1.0 }
    }
}

/// Whether a linked filing qualifies for labelling: assets above the
/// inflation-adjusted threshold and a prediction window that the calendar
/// fully observes.
pub fn qualify(
    example: &LinkedRecord,
    deflator: &Deflator,
    coverage: (NaiveDate, NaiveDate),
    rule: &QualifyRule,
) -> Result<bool, LabelError> {
    let t_fd = example.filing.filing_date;
    let assets = example
        .fundamentals
        .total_assets()
        .ok_or_else(|| LabelError::MissingAssets(example.filing.record_id()))?;
    let threshold = deflator.inflate(rule.threshold_1980, 1980, t_fd.year())?;
    let in_time = t_fd >= coverage.0 && add_years(t_fd, 1) <= coverage.1;
    Ok(assets * rule.assets_scale > threshold && in_time)
}

/// Next-year label: a bankruptcy in `(t_fd, t_fd + 1y]`. A company absent from
/// the calendar is negative.
pub fn assign_label(example: &LinkedRecord, calendar: &BankruptcyCalendar) -> bool {
    let f = &example.filing;
    let window = LabelWindow { t_pr: f.fiscal_year_end, t_fd: f.filing_date };
    label_for(&window, calendar.dates(&f.company_key()))
}

/// Label given the company's sorted bankruptcy dates.
pub fn label_for(window: &LabelWindow, dates: &[NaiveDate]) -> bool {
    dates.iter().any(|&d| window.in_prediction_period(d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Validation,
    Test,
    None,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
            Split::None => "none",
        }
    }
}

/// Last filing year of the train and validation periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitBounds {
    pub train_last_year: i32,
    pub validation_last_year: i32,
}

impl Default for SplitBounds {
    fn default() -> Self {
        Self { train_last_year: 2011, validation_last_year: 2015 }
    }
}

impl SplitBounds {
    pub fn split_for(&self, filing_date: NaiveDate) -> Split {
        let y = filing_date.year();
        if y <= self.train_last_year {
            Split::Train
        } else if y <= self.validation_last_year {
            Split::Validation
        } else {
            Split::Test
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub linked: LinkedRecord,
    pub window: LabelWindow,
    pub qualified: bool,
    /// Present iff `qualified`.
    pub label: Option<bool>,
    pub split: Split,
}

impl LabeledExample {
    pub fn record_id(&self) -> String {
        self.linked.filing.record_id()
    }
}

/// Per-run counts of examples that could not be qualified.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelReport {
    pub n_examples: usize,
    pub n_qualified: usize,
    pub n_positive: usize,
    /// Record ids with no total assets; these are left unqualified.
    pub missing_assets: Vec<String>,
}

/// Qualifies and labels linked records. Splits are left at `Split::None`;
/// see [`split`].
pub fn label_records(
    linked: Vec<LinkedRecord>,
    deflator: &Deflator,
    calendar: &BankruptcyCalendar,
    rule: &QualifyRule,
) -> Result<(Vec<LabeledExample>, LabelReport), LabelError> {
    let mut report = LabelReport { n_examples: linked.len(), ..LabelReport::default() };
    let mut out = Vec::with_capacity(linked.len());
    for rec in linked {
        let window = LabelWindow::new(rec.filing.fiscal_year_end, rec.filing.filing_date)?;
        let qualified = match qualify(&rec, deflator, calendar.coverage(), rule) {
            Ok(q) => q,
            Err(LabelError::MissingAssets(id)) => {
                report.missing_assets.push(id);
                false
            }
            Err(e) => return Err(e),
        };
        let label = qualified.then(|| assign_label(&rec, calendar));
        if qualified {
            report.n_qualified += 1;
        }
        if label == Some(true) {
            report.n_positive += 1;
        }
        out.push(LabeledExample { linked: rec, window, qualified, label, split: Split::None });
    }
    Ok((out, report))
}

/// Example indices per split. `full_train` is train followed by validation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub full_train: Vec<usize>,
}

/// Sets each example's split from its filing year and returns the index sets.
/// Unqualified examples get `Split::None` and appear in no set.
pub fn split(examples: &mut [LabeledExample], bounds: &SplitBounds) -> SplitIndices {
    let mut s = SplitIndices::default();
    for (i, e) in examples.iter_mut().enumerate() {
        e.split = if e.qualified { bounds.split_for(e.window.t_fd) } else { Split::None };
        match e.split {
            Split::Train => s.train.push(i),
            Split::Validation => s.validation.push(i),
            Split::Test => s.test.push(i),
            Split::None => {}
        }
    }
    s.full_train = s.train.iter().chain(&s.validation).copied().collect();
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n: usize,
    pub n_pos: usize,
    pub prevalence: Option<f64>,
    /// `round(n_neg / n_pos)`; absent without positives.
    pub negatives_per_positive: Option<u64>,
    /// Mean total assets after dropping values above the 95% quantile.
    pub mean_assets: Option<f64>,
}

/// Statistics over labelled examples; unqualified examples are ignored.
pub fn dataset_stats<'a, I>(examples: I) -> DatasetStats
where
    I: IntoIterator<Item = &'a LabeledExample>,
{
    let mut n = 0;
    let mut n_pos = 0;
    let mut assets = Vec::new();
    for e in examples {
        let Some(label) = e.label else { continue };
        n += 1;
        n_pos += usize::from(label);
        if let Some(a) = e.linked.fundamentals.total_assets() {
            assets.push(a);
        }
    }
    summarize_counts(n, n_pos, assets)
}

/// [`dataset_stats`] from raw counts and an asset list.
pub fn summarize_counts(n: usize, n_pos: usize, assets: Vec<f64>) -> DatasetStats {
    let n_neg = n - n_pos;
    DatasetStats {
        n,
        n_pos,
        prevalence: (n > 0).then(|| n_pos as f64 / n as f64),
        negatives_per_positive: (n_pos > 0).then(|| libm::round(n_neg as f64 / n_pos as f64) as u64),
        mean_assets: trimmed_mean(assets, 0.95),
    }
}

/// Linear-interpolation quantile of sorted data (`q` in `[0, 1]`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Mean of the values not exceeding the `q` quantile.
pub fn trimmed_mean(mut values: Vec<f64>, q: f64) -> Option<f64> {
    values.retain(|v| v.is_finite());
    values.sort_by(f64::total_cmp);
    let cut = quantile_sorted(&values, q)?;
    let kept: Vec<f64> = values.into_iter().take_while(|&v| v <= cut).collect();
    Some(kept.iter().sum::<f64>() / kept.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{FilingDocument, FilingMetadata, Items};
    use crate::linkage::{FundamentalsRecord, MatchBasis, Mnemonic, SourceForm};

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn linked(t_fd: NaiveDate, assets: Option<f64>) -> LinkedRecord {
        let t_pr = d(t_fd.year() - 1, 12, 31);
        let meta = FilingMetadata {
            cik: "42".into(),
            company_name: "Acme".into(),
            filing_date: t_fd,
            fiscal_year_end: t_pr,
            sic_code: None,
            state: None,
        };
        let mut values = BTreeMap::new();
        if let Some(a) = assets {
            values.insert(Mnemonic::At, a);
        }
        LinkedRecord {
            filing: FilingDocument::from_items(meta, Items::default()).unwrap(),
            fundamentals: FundamentalsRecord {
                cik: Some("42".into()),
                company_name: "Acme".into(),
                fiscal_year_end: t_pr,
                source_form: SourceForm::Form10K,
                values,
            },
            match_basis: MatchBasis::Cik,
            date_gap_days: 0,
        }
    }

    #[test]
    fn one_year_is_calendar_based() {
        assert_eq!(add_years(d(2020, 2, 29), 1), d(2021, 2, 28));
        assert_eq!(add_years(d(2021, 3, 1), 1), d(2022, 3, 1));
        assert_eq!(add_years(d(2021, 3, 1), -1), d(2020, 3, 1));
    }

    #[test]
    fn qualify_examples() {
        let cpi = Deflator::cpi_u();
        let cov = BankruptcyCalendar::default_coverage();
        let rule = QualifyRule::default();
        assert_eq!(qualify(&linked(d(1995, 3, 1), Some(1e12)), &cpi, cov, &rule), Ok(true));

        let exact = 1e8 * cpi.get(1995).unwrap() / cpi.get(1980).unwrap();
        assert_eq!(qualify(&linked(d(1995, 3, 1), Some(exact)), &cpi, cov, &rule), Ok(false));
        assert_eq!(qualify(&linked(d(1995, 3, 1), Some(exact * (1.0 + 1e-12))), &cpi, cov, &rule), Ok(true));

        assert_eq!(qualify(&linked(d(2022, 6, 1), Some(1e12)), &cpi, cov, &rule), Ok(false));
        assert_eq!(qualify(&linked(d(2021, 12, 31), Some(1e12)), &cpi, cov, &rule), Ok(true));
        assert!(matches!(
            qualify(&linked(d(1995, 3, 1), None), &cpi, cov, &rule),
            Err(LabelError::MissingAssets(_))
        ));
        let sparse = Deflator::new([(1980, 1.0)]).unwrap();
        assert_eq!(
            qualify(&linked(d(1995, 3, 1), Some(1e12)), &sparse, cov, &rule),
            Err(LabelError::MissingDeflator(1995))
        );
    }

    #[test]
    fn label_window_boundaries() {
        let t_fd = d(2005, 3, 15);
        let rec = linked(t_fd, Some(1e12));
        let check = |bk: NaiveDate| {
            let mut cal = BankruptcyCalendar::default();
            cal.insert("0042", bk).unwrap();
            assign_label(&rec, &cal)
        };
        assert!(check(t_fd + chrono::Days::new(100)));
        assert!(!check(t_fd - chrono::Days::new(1)));
        assert!(!check(t_fd));
        assert!(check(t_fd + chrono::Days::new(1)));
        assert!(check(d(2006, 3, 15)));
        assert!(!check(d(2006, 3, 16)));
        assert!(!assign_label(&rec, &BankruptcyCalendar::default()));
    }

    #[test]
    fn calendar_rejects_out_of_coverage() {
        let mut cal = BankruptcyCalendar::default();
        assert!(cal.insert("1", d(1978, 12, 31)).is_err());
        assert!(cal.insert("1", d(2023, 1, 1)).is_err());
        cal.insert("ACME INC", d(2000, 1, 1)).unwrap();
        cal.insert("Acme", d(1999, 1, 1)).unwrap();
        assert_eq!(cal.dates("ACME"), &[d(1999, 1, 1), d(2000, 1, 1)]);
    }

    #[test]
    fn split_boundaries() {
        let dates = [d(2011, 12, 31), d(2012, 1, 1), d(2015, 12, 31), d(2016, 1, 1)];
        let mut ex: Vec<LabeledExample> = dates
            .iter()
            .map(|&t| LabeledExample {
                linked: linked(t, Some(1e12)),
                window: LabelWindow::new(d(t.year() - 1, 12, 31), t).unwrap(),
                qualified: true,
                label: Some(false),
                split: Split::None,
            })
            .collect();
        ex.push(LabeledExample { qualified: false, label: None, ..ex[0].clone() });
        let s = split(&mut ex, &SplitBounds::default());
        let got: Vec<Split> = ex.iter().map(|e| e.split).collect();
        assert_eq!(got, [Split::Train, Split::Validation, Split::Validation, Split::Test, Split::None]);
        assert_eq!(s.full_train, [0, 1, 2]);
        assert_eq!(s.test, [3]);
    }

    #[test]
    fn negatives_per_positive() {
        let s = summarize_counts(662 + 83_990, 662, Vec::new());
        assert_eq!(s.negatives_per_positive, Some(127));
        let s = summarize_counts(2, 1, alloc::vec![1.0, 3.0]);
        assert_eq!(s.negatives_per_positive, Some(1));
        assert_eq!(s.prevalence, Some(0.5));
        let s = summarize_counts(3, 0, Vec::new());
        assert_eq!(s.negatives_per_positive, None);
        assert_eq!(s.mean_assets, None);
    }

    #[test]
    fn trimmed_mean_drops_top_tail() {
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        // q95 of 1..=100 is 95.05, so 1..=95 remain
        assert_eq!(trimmed_mean(values, 0.95), Some(48.0));
        assert_eq!(trimmed_mean(alloc::vec![5.0], 0.95), Some(5.0));
    }
}
