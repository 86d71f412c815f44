//! Synthetic benchmark: a corpus, fundamentals, a bankruptcy calendar and a
//! deflator with a planted next-year bankruptcy signal in both modalities.
//!
//! Core population: firms with 4 to 16 consecutive annual filings, placed
//! uniformly in time and clipped to fiscal years 1993-2020, until there are
//! `n_filings` filings. `n_positive` firms whose history ends inside the
//! window go bankrupt 30 to 330 days after their last filing, which makes
//! that filing positive. A `text_share` of the
//! positives announce it in their MD&A (restructuring, going-concern and
//! Chapter 11 language) while reporting ordinary financials; the others
//! report distressed ratios and no such language. A `distressed_share` of
//! the negatives report the same distressed ratios. Distressed filings, of
//! either label, mention milder operating trouble in their MD&A now and then.
//!
//! Noise around the core population: small firms below the asset threshold,
//! filings without fundamentals, fundamentals without filings, non-10-K
//! fundamentals rows, CIK-less fundamentals with reformatted names, calendar
//! entries beyond the one-year window, and raw (unsegmented) filing text with
//! a table of contents.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use bkpred_core::corpus::{FilingDocument, FilingMetadata, Items};
use bkpred_core::labeling::Deflator;
use bkpred_core::linkage::{FundamentalsRecord, Mnemonic, SourceForm};
use bkpred_core::seed::derive_seed;
use bkpred_core::NaiveDate;
use chrono::{Duration, Months};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, corpus::to_line, fundamentals::write_fundamentals, tables};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_filings: usize,
    pub n_positive: usize,
    pub text_share: f64,
    pub distressed_share: f64,
    pub raw_text_share: f64,
}

impl SynthConfig {
    /// 20,000 labelled filings, 159 positive (one per 125 negatives).
    pub fn standard(seed: u64) -> Self {
        Self {
            seed,
            n_filings: 20_000,
            n_positive: 159,
            text_share: 0.3,
            distressed_share: 0.1,
            raw_text_share: 0.1,
        }
    }

    /// Same design at a tenth of the size, for quick tests.
    pub fn small(seed: u64) -> Self {
        Self { n_filings: 2000, n_positive: 40, ..Self::standard(seed) }
    }
}

/// Ground truth of a core-population filing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    TextPositive,
    NumericPositive,
    DistressedNegative,
    Negative,
}

#[derive(Debug, Clone)]
pub struct SynthFiling {
    pub meta: FilingMetadata,
    pub items: Items,
    /// When set, the corpus line carries this unsegmented text instead of items.
    pub raw_text: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub config: SynthConfig,
    pub filings: Vec<SynthFiling>,
    pub fundamentals: Vec<FundamentalsRecord>,
    pub calendar: Vec<(String, NaiveDate)>,
    /// Core-population filings by record id.
    pub truth: BTreeMap<String, Kind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub config: SynthConfig,
    pub n_filings: usize,
    pub n_fundamentals: usize,
    pub n_calendar: usize,
    pub n_core: usize,
    pub kinds: BTreeMap<Kind, usize>,
}

const ADJECTIVES: [&str; 40] = [
    "Apex", "Bright", "Cedar", "Delta", "Eagle", "Frontier", "Granite", "Harbor", "Iron", "Juniper", "Keystone",
    "Liberty", "Meridian", "Northern", "Oak", "Pioneer", "Quantum", "Ridge", "Summit", "Titan", "Union", "Vanguard",
    "Western", "Atlas", "Beacon", "Crescent", "Dominion", "Evergreen", "Falcon", "Global", "Heritage", "Imperial",
    "Jade", "Kinetic", "Lakeside", "Monarch", "Nova", "Orion", "Prairie", "Redwood",
];
const NOUNS: [&str; 50] = [
    "Bay", "Bridge", "Canyon", "Coast", "Crest", "Field", "Forge", "Gate", "Grove", "Hill", "Isle", "Lake", "Lane",
    "Mill", "Mesa", "Park", "Peak", "Pine", "Point", "Port", "Range", "River", "Rock", "Shore", "Spring", "Star",
    "Stone", "Trail", "Vale", "View", "Wave", "Wood", "Arc", "Beam", "Core", "Dune", "Edge", "Flow", "Glen", "Haven",
    "Key", "Line", "Marsh", "North", "Path", "Quay", "Reef", "Sky", "Tide", "Yard",
];
const KINDS: [&str; 6] = ["Holdings", "Industries", "Systems", "Group", "Technologies", "Resources"];
const SUFFIXES: [&str; 4] = ["Inc", "Corp", "Co", "Inc."];
const STATES: [&str; 12] = ["CA", "NY", "TX", "DE", "IL", "OH", "PA", "FL", "MA", "NJ", "GA", "WA"];
const SIC_CODES: [u16; 16] =
    [100, 1311, 1381, 1531, 2834, 3571, 3714, 4512, 4911, 5045, 5411, 5812, 6021, 6726, 7372, 8062];

const GENERIC: [&str; 30] = [
    "Net sales increased {n} percent compared with the prior year driven by higher volumes in our core markets.",
    "Gross margin was {n} percent of sales reflecting changes in product mix and input costs.",
    "Selling general and administrative expenses were {n} million for the year.",
    "We continue to invest in research and development to support new product introductions.",
    "Capital expenditures of {n} million were funded from operating cash flow.",
    "Our effective tax rate was {n} percent compared with the statutory rate.",
    "Demand in our international segment remained stable throughout the year.",
    "We completed the integration of the business acquired in the prior year.",
    "Pricing actions offset most of the increase in raw material costs.",
    "The company repurchased {n} million of common stock under its authorized program.",
    "Backlog at year end was {n} million compared with the prior year.",
    "We expect capital spending next year to be in line with current levels.",
    "Foreign currency movements reduced reported sales by {n} percent.",
    "Interest expense decreased as a result of lower average borrowings.",
    "Working capital requirements were met through cash generated by operations.",
    "We paid quarterly dividends totaling {n} cents per share.",
    "Our revolving credit facility remained undrawn at year end.",
    "Inventory levels were reduced through improved supply chain planning.",
    "The segment reported operating income of {n} million.",
    "Depreciation and amortization expense was {n} million.",
    "We opened {n} new locations during the year.",
    "Customer retention remained high across our service contracts.",
    "Pension expense was consistent with the prior year.",
    "We believe existing cash and available credit are sufficient to fund operations.",
    "Market conditions in the residential sector improved during the second half.",
    "We introduced {n} new products that contributed to revenue growth.",
    "Raw material availability was adequate to meet production needs.",
    "The board approved an increase in the quarterly dividend.",
    "Warranty costs declined as product quality improved.",
    "Research and development spending was {n} percent of net sales.",
];

const MILD: [&str; 8] = [
    "Operating losses continued as demand weakened in several of our segments.",
    "Our liquidity position declined and we are in discussions with lenders regarding covenant waivers.",
    "We recorded impairment charges on long lived assets and goodwill.",
    "Cash flows from operations were negative for the year.",
    "We implemented cost reductions including workforce reductions and facility closures.",
    "Sales declined {n} percent as several large customers reduced orders.",
    "Margins deteriorated because of pricing pressure and underutilized capacity.",
    "We obtained an amendment to our credit agreement that increased the applicable interest rate.",
];

const INTENT: [&str; 6] = [
    "If we cannot complete a restructuring of our debt we may seek protection from creditors under Chapter 11 of the Bankruptcy Code.",
    "Recurring losses and defaults under our credit agreement raise substantial doubt about our ability to continue as a going concern.",
    "The board is evaluating strategic alternatives including a voluntary petition for reorganization under Chapter 11.",
    "We did not make the scheduled interest payment on our senior notes and are negotiating with our creditors.",
    "Without additional financing we may be forced to file for bankruptcy protection in the coming months.",
    "We have retained restructuring advisors to assist in preparing a possible Chapter 11 filing.",
];

const BYSTANDER: &str = "One of our customers filed for protection under Chapter 11 and the related receivable was fully reserved.";

fn sentence(rng: &mut ChaCha8Rng, template: &str) -> String {
    template.replace("{n}", &rng.gen_range(2..40).to_string())
}

/// Financial condition of one filing; lower means weaker.
fn health(rng: &mut ChaCha8Rng, distressed: bool) -> f64 {
    let d = if distressed { Normal::new(-3.0, 0.7) } else { Normal::new(0.3, 1.0) };
    d.expect("valid normal").sample(rng)
}

fn money(v: f64) -> f64 {
    (v / 1000.0).round() * 1000.0
}

/// Mnemonic values in dollars for total assets `at` and condition `h`.
fn fundamentals_values(rng: &mut ChaCha8Rng, at: f64, h: f64, keep_inventory: bool) -> BTreeMap<Mnemonic, f64> {
    let mut n = |sd: f64| Normal::new(0.0, sd).expect("valid normal").sample(rng);
    let sale = (0.9 + 0.15 * h + n(0.3)).max(0.05);
    let ebit = 0.07 + 0.04 * h + n(0.03);
    let ni = ebit - 0.03 + n(0.02);
    let dp = (0.04 + n(0.01)).abs();
    let oiadp = ebit + n(0.005);
    let re = 0.25 + 0.2 * h + n(0.15);
    let lt = (0.55 - 0.12 * h + n(0.1)).clamp(0.05, 1.8);
    let act = (0.4 + n(0.1)).clamp(0.05, 0.9);
    let lct = (0.25 - 0.06 * h + n(0.06)).clamp(0.02, 1.2);
    let ch = (0.06 + 0.02 * h + n(0.03)).max(0.002);
    let che = ch + n(0.03).abs();
    let invt = (0.12 + n(0.05)).max(0.0);
    let invch = invt * (0.02 + n(0.08));
    let ap = (0.08 - 0.01 * h + n(0.02)).max(0.005);
    let dlc = (0.05 - 0.03 * h + n(0.03)).max(0.0);
    let dltt = (0.2 - 0.05 * h + n(0.08)).max(0.0);
    let mut v = BTreeMap::new();
    let mut put = |m: Mnemonic, r: f64| {
        v.insert(m, money(r * at));
    };
    put(Mnemonic::At, 1.0);
    put(Mnemonic::Sale, sale);
    put(Mnemonic::Ebit, ebit);
    put(Mnemonic::Ni, ni);
    put(Mnemonic::Dp, dp);
    put(Mnemonic::Oiadp, oiadp);
    put(Mnemonic::Re, re);
    put(Mnemonic::Lt, lt);
    put(Mnemonic::Seq, 1.0 - lt);
    put(Mnemonic::Act, act);
    put(Mnemonic::Lct, lct);
    put(Mnemonic::Wcap, act - lct);
    put(Mnemonic::Ch, ch);
    put(Mnemonic::Che, che);
    put(Mnemonic::Ap, ap);
    put(Mnemonic::Dlc, dlc);
    put(Mnemonic::Dltt, dltt);
    if keep_inventory {
        put(Mnemonic::Invt, invt);
        put(Mnemonic::Invch, invch);
    }
    // scattered missing values; total assets always reported
    v.retain(|m, _| *m == Mnemonic::At || rng.gen::<f64>() >= 0.03);
    v
}

fn mdna(rng: &mut ChaCha8Rng, mild_p: f64, intent: bool) -> String {
    let n = rng.gen_range(8..15);
    let picked: Vec<&str> = GENERIC.choose_multiple(rng, n).copied().collect();
    let mut s: Vec<String> = picked.into_iter().map(|t| sentence(rng, t)).collect();
    if rng.gen::<f64>() < mild_p {
        let n = rng.gen_range(1..3);
        let picked: Vec<&str> = MILD.choose_multiple(rng, n).copied().collect();
        for t in picked {
            let at = rng.gen_range(0..=s.len());
            s.insert(at, sentence(rng, t));
        }
    }
    if intent {
        for t in INTENT.choose_multiple(rng, 2) {
            let at = rng.gen_range(0..=s.len());
            s.insert(at, (*t).to_string());
        }
    } else if rng.gen::<f64>() < 0.005 {
        let at = rng.gen_range(0..=s.len());
        s.insert(at, BYSTANDER.to_string());
    }
    s.join(" ")
}

fn items_for(rng: &mut ChaCha8Rng, name: &str, mdna_text: String) -> Items {
    let mut items = Items::default();
    items.set(1, format!("{name} designs manufactures and sells products to commercial customers. The company employs {} people.", rng.gen_range(200..20000)));
    items.set(1 + 1, "Our principal facilities are owned or leased and are adequate for current needs.".into());
    items.set(3, "We are party to ordinary routine litigation incidental to the business.".into());
    items.set(7, mdna_text);
    items.set(8, "The consolidated financial statements are included elsewhere in this report.".into());
    items
}

fn raw_text_of(items: &Items) -> String {
    const TITLES: [&str; 15] = [
        "Business",
        "Properties",
        "Legal Proceedings",
        "Submission of Matters to a Vote of Security Holders",
        "Market for Registrant's Common Equity",
        "Selected Financial Data",
        "Management's Discussion and Analysis of Financial Condition and Results of Operations",
        "Financial Statements and Supplementary Data",
        "Changes in and Disagreements with Accountants",
        "Directors and Executive Officers",
        "Executive Compensation",
        "Security Ownership of Certain Beneficial Owners",
        "Certain Relationships and Related Transactions",
        "Principal Accountant Fees and Services",
        "Exhibits and Financial Statement Schedules",
    ];
    let mut s = String::from("ANNUAL REPORT\nTABLE OF CONTENTS\n");
    for (n, t) in TITLES.iter().enumerate() {
        let _ = writeln!(s, "Item {}. {t}", n + 1);
    }
    for (n, text) in items.iter() {
        if !text.is_empty() {
            let _ = write!(s, "\nITEM {n}. {}\n{text}\n", TITLES[usize::from(n) - 1].to_uppercase());
        }
    }
    s
}

fn month_end(year: i32, month: u32) -> NaiveDate {
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
    first.checked_add_months(Months::new(1)).expect("in range") - Duration::days(1)
}

struct Firm {
    cik: String,
    name: String,
    sic: u16,
    state: &'static str,
    fye_month: u32,
    delay: i64,
    first_fy: i32,
    n_years: usize,
    /// History continues past the window (or was cut to fit the size).
    open_ended: bool,
    log_assets: f64,
}

const FIRST_FY: i32 = 1993;
const LAST_FY: i32 = 2020;

/// First fiscal year, number of years and open-endedness of one history.
type Span = (i32, usize, bool);

fn span(rng: &mut ChaCha8Rng) -> Span {
    let len: i32 = rng.gen_range(4..=16);
    let start = rng.gen_range(FIRST_FY - len + 1..=LAST_FY);
    let a = start.max(FIRST_FY);
    let b = (start + len - 1).min(LAST_FY);
    (a, (b - a + 1) as usize, start + len - 1 > LAST_FY)
}

fn firms(rng: &mut ChaCha8Rng, spans: &[Span], cik_base: u64, log_assets: f64) -> Vec<Firm> {
    let n = spans.len();
    let combos = ADJECTIVES.len() * NOUNS.len() * KINDS.len();
    let picks = rand::seq::index::sample(rng, combos, n).into_vec();
    picks
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let (a, rest) = (p % ADJECTIVES.len(), p / ADJECTIVES.len());
            let (b, k) = (rest % NOUNS.len(), rest / NOUNS.len());
            let suffix = SUFFIXES[rng.gen_range(0..SUFFIXES.len())];
            Firm {
                cik: format!("{:010}", cik_base + 7 * i as u64),
                name: format!("{} {} {} {suffix}", ADJECTIVES[a], NOUNS[b], KINDS[k]),
                sic: SIC_CODES[rng.gen_range(0..SIC_CODES.len())],
                state: STATES[rng.gen_range(0..STATES.len())],
                fye_month: *[12, 12, 12, 12, 12, 12, 12, 6, 9, 3].choose(rng).expect("nonempty"),
                delay: rng.gen_range(60..95),
                first_fy: spans[i].0,
                n_years: spans[i].1,
                open_ended: spans[i].2,
                log_assets: log_assets + Normal::new(0.0, 0.8).expect("valid normal").sample(rng),
            }
        })
        .collect()
}

impl Firm {
    fn fye(&self, j: usize) -> NaiveDate {
        month_end(self.first_fy + j as i32, self.fye_month)
    }

    fn filed(&self, rng: &mut ChaCha8Rng, j: usize) -> NaiveDate {
        self.fye(j) + Duration::days(self.delay + rng.gen_range(-3..=3))
    }

    fn meta(&self, fye: NaiveDate, filed: NaiveDate) -> FilingMetadata {
        FilingMetadata {
            cik: self.cik.clone(),
            company_name: self.name.clone(),
            filing_date: filed,
            fiscal_year_end: fye,
            sic_code: Some(self.sic),
            state: Some(self.state.into()),
        }
    }

    /// How the fundamentals source spells identity: usually the bare CIK,
    /// sometimes zero-padded, sometimes no CIK and a reformatted name.
    fn fundamentals_identity(&self, rng: &mut ChaCha8Rng) -> (Option<String>, String) {
        let bare = self.cik.trim_start_matches('0').to_string();
        let u: f64 = rng.gen();
        if u < 0.05 {
            let base = self.name.rsplit_once(' ').map_or(self.name.as_str(), |(b, _)| b);
            (None, format!("{}, INC.", base.to_uppercase()))
        } else if u < 0.10 {
            (Some(self.cik.clone()), self.name.clone())
        } else {
            (Some(bare), self.name.clone())
        }
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "synth"));
    let mut spans = Vec::new();
    let mut total = 0;
    while total < cfg.n_filings {
        let mut sp = span(&mut rng);
        if total + sp.1 > cfg.n_filings {
            sp = (sp.0, cfg.n_filings - total, true);
        }
        total += sp.1;
        spans.push(sp);
    }
    let core = firms(&mut rng, &spans, 1000, (2e9f64).ln());
    let closed: Vec<usize> = (0..core.len()).filter(|&i| !core[i].open_ended).collect();
    if cfg.n_positive > closed.len() {
        return Err(Error::Config(format!("synth cannot place {} positives among {} firms", cfg.n_positive, closed.len())));
    }
    let positive: Vec<bool> = {
        let mut v = vec![false; core.len()];
        for i in rand::seq::index::sample(&mut rng, closed.len(), cfg.n_positive) {
            v[closed[i]] = true;
        }
        v
    };
    let n_text = (cfg.text_share * cfg.n_positive as f64).round() as usize;
    // every k-th positive by time of failure, so each period gets its share
    let mut pos_order: Vec<usize> = (0..core.len()).filter(|&i| positive[i]).collect();
    pos_order.shuffle(&mut rng);
    pos_order.sort_by_key(|&i| core[i].first_fy + core[i].n_years as i32);
    let text_firms: std::collections::BTreeSet<usize> = pos_order
        .iter()
        .enumerate()
        .filter(|&(k, _)| (k + 1) * n_text / cfg.n_positive > k * n_text / cfg.n_positive)
        .map(|(_, &i)| i)
        .collect();

    let mut data = SynthData {
        config: cfg.clone(),
        filings: Vec::new(),
        fundamentals: Vec::new(),
        calendar: Vec::new(),
        truth: BTreeMap::new(),
    };
    let push_filing = |data: &mut SynthData, rng: &mut ChaCha8Rng, meta: FilingMetadata, items: Items| {
        let raw = (rng.gen::<f64>() < cfg.raw_text_share).then(|| raw_text_of(&items));
        data.filings.push(SynthFiling { meta, items, raw_text: raw });
    };

    for (c, f) in core.iter().enumerate() {
        let keep_inventory = rng.gen::<f64>() >= 0.15;
        for j in 0..f.n_years {
            let fye = f.fye(j);
            let filed = f.filed(&mut rng, j);
            let last = j + 1 == f.n_years;
            let kind = match (positive[c] && last, text_firms.contains(&c)) {
                (true, true) => Kind::TextPositive,
                (true, false) => Kind::NumericPositive,
                _ if rng.gen::<f64>() < cfg.distressed_share => Kind::DistressedNegative,
                _ => Kind::Negative,
            };
            let distressed = matches!(kind, Kind::NumericPositive | Kind::DistressedNegative);
            let mild_p = if distressed || kind == Kind::TextPositive { 0.08 } else { 0.05 };
            let text = mdna(&mut rng, mild_p, kind == Kind::TextPositive);
            let items = items_for(&mut rng, &f.name, text);
            let meta = f.meta(fye, filed);
            let doc = FilingDocument::from_items(meta.clone(), items.clone())?;
            data.truth.insert(doc.record_id(), kind);
            push_filing(&mut data, &mut rng, meta, items);

            let at = f.log_assets.exp().max(5e8) * (1.0 + 0.03 * j as f64);
            let h = health(&mut rng, distressed);
            let (cik, name) = f.fundamentals_identity(&mut rng);
            let gap = rng.gen_range(-3..=3);
            data.fundamentals.push(FundamentalsRecord {
                cik: cik.clone(),
                company_name: name.clone(),
                fiscal_year_end: fye + Duration::days(gap),
                source_form: SourceForm::Form10K,
                values: fundamentals_values(&mut rng, at, h, keep_inventory),
            });
            if rng.gen::<f64>() < 0.015 {
                // an interim-report row for the same period, filtered before matching
                data.fundamentals.push(FundamentalsRecord {
                    cik,
                    company_name: name,
                    fiscal_year_end: fye,
                    source_form: SourceForm::Other,
                    values: fundamentals_values(&mut rng, at, 0.0, keep_inventory),
                });
            }
            if last && positive[c] {
                let date = filed + Duration::days(rng.gen_range(30..=330));
                data.calendar.push((f.cik.trim_start_matches('0').to_string(), date));
            } else if last && !f.open_ended && f.first_fy + (f.n_years as i32) < 2018 && rng.gen::<f64>() < 0.02 {
                // bankrupt long after the last filing: still negative
                let date = f.filed(&mut rng, j) + Duration::days(366 + rng.gen_range(30..400));
                data.calendar.push((f.name.clone(), date));
            }
        }
    }

    // small firms: below the asset threshold, never labelled
    let noise_spans = |rng: &mut ChaCha8Rng, n: usize| -> Vec<Span> { (0..n).map(|_| span(rng)).collect() };
    let sp = noise_spans(&mut rng, 15);
    let small = firms(&mut rng, &sp, 5_000_000, (5e7f64).ln());
    // firms with filings but no fundamentals
    let sp = noise_spans(&mut rng, 10);
    let orphans = firms(&mut rng, &sp, 7_000_000, (2e9f64).ln());
    for (group, has_fund) in [(&small, true), (&orphans, false)] {
        for f in group.iter() {
            for j in 0..f.n_years {
                let fye = f.fye(j);
                let filed = f.filed(&mut rng, j);
                let text = mdna(&mut rng, 0.05, false);
                let items = items_for(&mut rng, &f.name, text);
                push_filing(&mut data, &mut rng, f.meta(fye, filed), items);
                if has_fund {
                    let at = f.log_assets.exp().min(2e8);
                    data.fundamentals.push(FundamentalsRecord {
                        cik: Some(f.cik.trim_start_matches('0').to_string()),
                        company_name: f.name.clone(),
                        fiscal_year_end: fye,
                        source_form: SourceForm::Form10K,
                        values: {
                        let h = health(&mut rng, false);
                        fundamentals_values(&mut rng, at, h, true)
                    },
                    });
                }
            }
        }
    }
    // fundamentals with no filing
    let sp = noise_spans(&mut rng, 10);
    let ghosts = firms(&mut rng, &sp, 9_000_000, (2e9f64).ln());
    for f in &ghosts {
        for j in 0..f.n_years {
            let at = f.log_assets.exp();
            data.fundamentals.push(FundamentalsRecord {
                cik: Some(f.cik.trim_start_matches('0').to_string()),
                company_name: f.name.clone(),
                fiscal_year_end: f.fye(j),
                source_form: SourceForm::Form10K,
                values: {
                        let h = health(&mut rng, false);
                        fundamentals_values(&mut rng, at, h, true)
                    },
            });
        }
    }
    for i in 0..10 {
        let d = NaiveDate::from_ymd_opt(1995 + 2 * i, 5, 17).expect("valid date");
        data.calendar.push((format!("Unlisted Debtor {i} LLC"), d));
    }
    data.calendar.sort();
    Ok(data)
}

impl SynthData {
    pub fn summary(&self) -> SynthSummary {
        let mut kinds = BTreeMap::new();
        for k in self.truth.values() {
            *kinds.entry(*k).or_insert(0) += 1;
        }
        SynthSummary {
            config: self.config.clone(),
            n_filings: self.filings.len(),
            n_fundamentals: self.fundamentals.len(),
            n_calendar: self.calendar.len(),
            n_core: self.truth.len(),
            kinds,
        }
    }

    pub fn documents(&self) -> Result<Vec<FilingDocument>> {
        self.filings
            .iter()
            .map(|f| match &f.raw_text {
                Some(raw) => Ok(bkpred_core::corpus::parse_filing(raw, f.meta.clone())?),
                None => Ok(FilingDocument::from_items(f.meta.clone(), f.items.clone())?),
            })
            .collect()
    }
}

/// Paths of the files written by [`write`].
#[derive(Debug, Clone)]
pub struct SynthPaths {
    pub corpus: PathBuf,
    pub fundamentals: PathBuf,
    pub calendar: PathBuf,
    pub deflator: PathBuf,
    pub summary: PathBuf,
}

impl SynthPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            corpus: dir.join("corpus.jsonl"),
            fundamentals: dir.join("fundamentals.csv"),
            calendar: dir.join("calendar.csv"),
            deflator: dir.join("deflator.csv"),
            summary: dir.join("synth_summary.json"),
        }
    }

    pub fn all(&self) -> [&Path; 5] {
        [&self.corpus, &self.fundamentals, &self.calendar, &self.deflator, &self.summary]
    }
}

pub fn write(data: &SynthData, dir: &Path) -> Result<SynthPaths> {
    let p = SynthPaths::in_dir(dir);
    let mut w = io::create(&p.corpus)?;
    for f in &data.filings {
        let line = match &f.raw_text {
            Some(raw) => serde_json::json!({
                "cik": f.meta.cik,
                "company": f.meta.company_name,
                "filing_date": f.meta.filing_date.to_string(),
                "fiscal_year_end": f.meta.fiscal_year_end.to_string(),
                "sic": f.meta.sic_code,
                "state": f.meta.state,
                "raw_text": raw,
            })
            .to_string(),
            None => to_line(&FilingDocument::from_items(f.meta.clone(), f.items.clone())?),
        };
        w.write_all(line.as_bytes()).map_err(|e| Error::io(&p.corpus, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(&p.corpus, e))?;
    }
    io::finish(&p.corpus, w)?;
    write_fundamentals(&p.fundamentals, &data.fundamentals)?;
    tables::write_calendar(&p.calendar, &data.calendar)?;
    tables::write_deflator(&p.deflator, &Deflator::cpi_u())?;
    io::write_json(&p.summary, &data.summary())?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Datelike;

    #[test]
    fn deterministic_and_shaped() {
        let a = generate(&SynthConfig::small(3)).unwrap();
        let b = generate(&SynthConfig::small(3)).unwrap();
        assert_eq!(a.documents().unwrap(), b.documents().unwrap());
        assert_eq!(a.fundamentals, b.fundamentals);
        let s = a.summary();
        assert_eq!(s.n_core, 2000);
        assert_eq!(s.kinds[&Kind::TextPositive] + s.kinds[&Kind::NumericPositive], 40);
        assert_eq!(s.kinds[&Kind::TextPositive], 12);
        assert!(a.filings.iter().all(|f| f.meta.filing_date.year() <= 2021));
        assert_ne!(generate(&SynthConfig::small(4)).unwrap().fundamentals, a.fundamentals);
    }

    #[test]
    fn raw_text_segments_back_to_items() {
        let a = generate(&SynthConfig::small(5)).unwrap();
        let f = a.filings.iter().find(|f| f.raw_text.is_some()).unwrap();
        let d = bkpred_core::corpus::parse_filing(f.raw_text.as_ref().unwrap(), f.meta.clone()).unwrap();
        assert!(d.items.get(7).ends_with(f.items.get(7)));
        assert!(d.items.get(7).starts_with("MANAGEMENT'S DISCUSSION"));
    }
}
