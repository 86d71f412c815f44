use std::collections::BTreeMap;

use bkpred_core::corpus::{FilingDocument, FilingMetadata, Items};
use bkpred_core::labeling::{
    add_years, label_for, label_records, qualify, split, summarize_counts, trimmed_mean, BankruptcyCalendar, Deflator,
    LabelWindow, QualifyRule, Split, SplitBounds,
};
use bkpred_core::linkage::{FundamentalsRecord, LinkedRecord, MatchBasis, Mnemonic, SourceForm};
use bkpred_core::NaiveDate;
use chrono::Duration;
use proptest::prelude::*;

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).unwrap()
}

fn linked(cik: &str, fye: NaiveDate, filed: NaiveDate, at: Option<f64>) -> LinkedRecord {
    let meta = FilingMetadata {
        cik: cik.into(),
        company_name: format!("Company {cik}"),
        filing_date: filed,
        fiscal_year_end: fye,
        sic_code: None,
        state: None,
    };
    LinkedRecord {
        filing: FilingDocument::from_items(meta, Items::default()).unwrap(),
        fundamentals: FundamentalsRecord {
            cik: Some(cik.into()),
            company_name: format!("Company {cik}"),
            fiscal_year_end: fye,
            source_form: SourceForm::Form10K,
            values: at.map(|a| BTreeMap::from([(Mnemonic::At, a)])).unwrap_or_default(),
        },
        match_basis: MatchBasis::Cik,
        date_gap_days: 0,
    }
}

proptest! {
    #[test]
    fn far_future_bankruptcies_never_change_labels(
        start in 0i64..9000,
        delay in 0i64..200,
        existing in prop::collection::vec(-800i64..800, 0..4),
        extra in 1i64..3000,
    ) {
        let t_pr = d(1990, 1, 1) + Duration::days(start);
        let t_fd = t_pr + Duration::days(delay);
        let w = LabelWindow::new(t_pr, t_fd).unwrap();
        let mut dates: Vec<NaiveDate> = existing.iter().map(|&o| t_fd + Duration::days(o)).collect();
        dates.sort();
        let before = label_for(&w, &dates);
        dates.push(add_years(t_fd, 1) + Duration::days(extra));
        prop_assert_eq!(label_for(&w, &dates), before);
    }

    #[test]
    fn qualify_is_monotone_in_assets(a in 0.0f64..1e10, b in 0.0f64..1e10, year in 1993i32..2021) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let filed = d(year, 3, 15);
        let defl = Deflator::cpi_u();
        let cov = BankruptcyCalendar::default_coverage();
        let rule = QualifyRule::default();
        let q_lo = qualify(&linked("1", d(year - 1, 12, 31), filed, Some(lo)), &defl, cov, &rule).unwrap();
        let q_hi = qualify(&linked("1", d(year - 1, 12, 31), filed, Some(hi)), &defl, cov, &rule).unwrap();
        prop_assert!(!q_lo || q_hi);
    }
}

#[test]
fn splits_equal_year_filter_oracle() {
    let mut recs = Vec::new();
    for k in 0..20 {
        let year = 1993 + (k * 7) % 29;
        let filed = d(year, 1 + (k as u32 % 12), 1 + (k as u32 % 28));
        recs.push(linked(&k.to_string(), filed - Duration::days(90), filed, Some(1e12)));
    }
    let mut cal = BankruptcyCalendar::new(BankruptcyCalendar::default_coverage());
    cal.insert("3", recs[3].filing.filing_date + Duration::days(30)).unwrap();
    let (mut ex, report) = label_records(recs, &Deflator::cpi_u(), &cal, &QualifyRule::default()).unwrap();
    assert_eq!(report.n_positive, 1);
    let idx = split(&mut ex, &SplitBounds::default());
    for (i, e) in ex.iter().enumerate() {
        let y = e.window.t_fd.format("%Y").to_string().parse::<i32>().unwrap();
        let want = if !e.qualified {
            Split::None
        } else if y <= 2011 {
            Split::Train
        } else if y <= 2015 {
            Split::Validation
        } else {
            Split::Test
        };
        assert_eq!(e.split, want);
        let sets = [&idx.train, &idx.validation, &idx.test];
        assert_eq!(sets.iter().filter(|s| s.contains(&i)).count(), usize::from(want != Split::None));
    }
    assert_eq!(idx.full_train.len(), idx.train.len() + idx.validation.len());
}

#[test]
fn trimmed_mean_matches_sort_and_drop() {
    let values: Vec<f64> = (0..200).map(|i| ((i * 7919) % 1009) as f64).collect();
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let pos: f64 = 0.95 * 199.0;
    let cut = sorted[pos as usize] + (sorted[pos as usize + 1] - sorted[pos as usize]) * (pos - pos.floor());
    let kept: Vec<f64> = sorted.iter().copied().filter(|&v| v <= cut).collect();
    let want = kept.iter().sum::<f64>() / kept.len() as f64;
    assert!((trimmed_mean(values, 0.95).unwrap() - want).abs() < 1e-9);
    let s = summarize_counts(2, 1, vec![]);
    assert_eq!((s.negatives_per_positive, s.prevalence), (Some(1), Some(0.5)));
    assert_eq!(summarize_counts(84_652, 662, vec![]).negatives_per_positive, Some(127));
}
