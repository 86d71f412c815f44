use serde::{Deserialize, Serialize};

use crate::linkage::{FundamentalsRecord, Mnemonic};

pub const N_FEATURES: usize = 28;

/// Column names, in feature order.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "ACT/LCT",
    "AP/SALE",
    "CHE/AT",
    "CH/AT",
    "CH/LCT",
    "(EBIT+DP)/AT",
    "EBIT/AT",
    "EBIT/SALE",
    "(DLC+0.5*DLTT)/AT",
    "INVCH/INVT",
    "INVT/SALE",
    "(LCT-CH)/AT",
    "LCT/AT",
    "LCT/LT",
    "LCT/SALE",
    "LT/AT",
    "log(AT)",
    "log(SALE)",
    "NI/AT",
    "NI/SALE",
    "OIADP/AT",
    "OIADP/SALE",
    "(ACT-INVT)/SALE",
    "RE/AT",
    "RE/LCT",
    "SALE/AT",
    "SEQ/AT",
    "WCAP/AT",
];

/// The 28 ratios of one fundamentals record; `None` marks a missing value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [Option<f64>; N_FEATURES]);

impl AsRef<[Option<f64>]> for FeatureVector {
    fn as_ref(&self) -> &[Option<f64>] {
        &self.0
    }
}

impl FeatureVector {
    /// Missing values as `NaN`.
    pub fn to_nan_row(&self) -> [f64; N_FEATURES] {
        self.0.map(|v| v.unwrap_or(f64::NAN))
    }
}

fn div(num: Option<f64>, den: Option<f64>) -> Option<f64> {
    let (n, d) = (num?, den?);
    if d == 0.0 {
        return None;
    }
    Some(n / d).filter(|v| v.is_finite())
}

fn ln(x: Option<f64>) -> Option<f64> {
    x.filter(|&v| v > 0.0).map(libm::log)
}

/// Evaluates every ratio. Missing operands, zero denominators and nonpositive
/// log arguments give `None` at that position.
pub fn compute_ratios(r: &FundamentalsRecord) -> FeatureVector {
    use Mnemonic::*;
    let g = |m| r.get(m);
    let add = |a: Option<f64>, b: Option<f64>| Some(a? + b?);
    let sub = |a: Option<f64>, b: Option<f64>| Some(a? - b?);
    let at = g(At);
    let sale = g(Sale);
    let lct = g(Lct);
    FeatureVector([
        div(g(Act), lct),
        div(g(Ap), sale),
        div(g(Che), at),
        div(g(Ch), at),
        div(g(Ch), lct),
        div(add(g(Ebit), g(Dp)), at),
        div(g(Ebit), at),
        div(g(Ebit), sale),
        div(add(g(Dlc), g(Dltt).map(|v| 0.5 * v)), at),
        div(g(Invch), g(Invt)),
        div(g(Invt), sale),
        div(sub(lct, g(Ch)), at),
        div(lct, at),
        div(lct, g(Lt)),
        div(lct, sale),
        div(g(Lt), at),
        ln(at),
        ln(sale),
        div(g(Ni), at),
        div(g(Ni), sale),
        div(g(Oiadp), at),
        div(g(Oiadp), sale),
        div(sub(g(Act), g(Invt)), sale),
        div(g(Re), at),
        div(g(Re), lct),
        div(sale, at),
        div(g(Seq), at),
        div(g(Wcap), at),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::SourceForm;
    use alloc::collections::BTreeMap;

    fn record(vals: &[(Mnemonic, f64)]) -> FundamentalsRecord {
        FundamentalsRecord {
            cik: None,
            company_name: "X".into(),
            fiscal_year_end: chrono::NaiveDate::from_ymd_opt(2000, 12, 31).unwrap(),
            source_form: SourceForm::Form10K,
            values: vals.iter().copied().collect::<BTreeMap<_, _>>(),
        }
    }

    #[test]
    fn wcap_over_at() {
        let f = compute_ratios(&record(&[(Mnemonic::Wcap, 50.0), (Mnemonic::At, 200.0)]));
        assert_eq!(f.0[27], Some(0.25));
        assert_eq!(f.0[0], None);
    }

    #[test]
    fn zero_assets() {
        let vals: alloc::vec::Vec<_> = Mnemonic::ALL.iter().map(|&m| (m, if m == Mnemonic::At { 0.0 } else { 3.0 })).collect();
        let f = compute_ratios(&record(&vals));
        for (name, v) in FEATURE_NAMES.iter().zip(f.0) {
            let uses_at = name.ends_with("/AT") || *name == "log(AT)";
            assert_eq!(v.is_none(), uses_at, "{name}");
        }
    }

    #[test]
    fn negative_sales_log_missing() {
        let f = compute_ratios(&record(&[(Mnemonic::Sale, -5.0), (Mnemonic::At, 10.0)]));
        assert_eq!(f.0[17], None);
        assert_eq!(f.0[25], Some(-0.5));
        assert!((f.0[16].unwrap() - libm::log(10.0)).abs() < 1e-15);
    }
}
