//! Metrics tables and curve plots for one or more scorers.
//!
//! Outputs: `metrics.csv` (one row per model), `pr.csv`, `roc.csv`,
//! `cap.csv` (long format `model,x,y`) and a self-contained SVG per curve
//! kind. Output bytes depend only on the inputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bkpred_core::eval::{CurvePoint, MetricsReport};

use crate::error::{Error, Result};
use crate::io::{create, fmt_f64, write_string};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Pr,
    Roc,
    Cap,
}

impl CurveKind {
    pub const ALL: [CurveKind; 3] = [CurveKind::Pr, CurveKind::Roc, CurveKind::Cap];

    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Pr => "pr",
            CurveKind::Roc => "roc",
            CurveKind::Cap => "cap",
        }
    }

    fn axes(self) -> (&'static str, &'static str) {
        match self {
            CurveKind::Pr => ("Recall", "Precision"),
            CurveKind::Roc => ("False positive rate", "True positive rate"),
            CurveKind::Cap => ("Fraction of observations", "Recall"),
        }
    }

    fn points(self, r: &MetricsReport) -> &[CurvePoint] {
        match self {
            CurveKind::Pr => &r.curves.pr,
            CurveKind::Roc => &r.curves.roc,
            CurveKind::Cap => &r.curves.cap,
        }
    }
}

/// Writes every report file into `dir` and returns the written paths.
pub fn render_report(reports: &[(String, MetricsReport)], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let p = dir.join("metrics.csv");
    write_metrics_csv(&p, reports)?;
    written.push(p);
    for kind in CurveKind::ALL {
        let p = dir.join(format!("{}.csv", kind.name()));
        write_curve_csv(&p, reports, kind)?;
        written.push(p);
        let p = dir.join(format!("{}.svg", kind.name()));
        write_string(&p, &render_svg(reports, kind))?;
        written.push(p);
    }
    Ok(written)
}

pub fn write_metrics_csv(path: &Path, reports: &[(String, MetricsReport)]) -> Result<()> {
    let k = reports.first().map_or(bkpred_core::eval::DEFAULT_K, |r| r.1.k);
    let mut w = csv::Writer::from_writer(create(path)?);
    let recall = format!("recall@{k}");
    w.write_record(["model", "roc_auc", "ap", recall.as_str(), "cap_ratio", "n", "n_pos", "ties_at_k"])?;
    for (name, r) in reports {
        w.write_record([
            name.clone(),
            fmt_f64(r.roc_auc),
            fmt_f64(r.ap),
            fmt_f64(r.recall_at_k),
            fmt_f64(r.cap_ratio),
            r.n.to_string(),
            r.n_pos.to_string(),
            r.ties_at_k.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_curve_csv(path: &Path, reports: &[(String, MetricsReport)], kind: CurveKind) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["model", "x", "y"])?;
    for (name, r) in reports {
        for p in kind.points(r) {
            w.write_record([name.as_str(), &fmt_f64(p.x), &fmt_f64(p.y)])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];
const W: f64 = 480.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Unit-square plot with one polyline per model. Coordinates are printed
/// with two decimals.
pub fn render_svg(reports: &[(String, MetricsReport)], kind: CurveKind) -> String {
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |x: f64| LEFT + x.clamp(0.0, 1.0) * pw;
    let py = |y: f64| TOP + (1.0 - y.clamp(0.0, 1.0)) * ph;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    for t in 0..=5 {
        let v = f64::from(t) / 5.0;
        let _ = writeln!(s, r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#ddd"/>"##, px(v), py(0.0), px(v), py(1.0));
        let _ = writeln!(s, r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#ddd"/>"##, px(0.0), py(v), px(1.0), py(v));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{v:.1}</text>"#, px(v), py(0.0) + 15.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"#, px(0.0) - 5.0, py(v) + 4.0);
    }
    if kind != CurveKind::Pr {
        let _ = writeln!(s, r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4 4"/>"##, px(0.0), py(0.0), px(1.0), py(1.0));
    }
    let _ = writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
    let (xl, yl) = kind.axes();
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xl}</text>"#, LEFT + pw / 2.0, H - 12.0);
    let _ = writeln!(s, r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{yl}</text>"#, TOP + ph / 2.0, TOP + ph / 2.0);
    for (i, (name, r)) in reports.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = kind.points(r).iter().map(|p| format!("{:.2},{:.2}", px(p.x), py(p.y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        // legend top right for PR, bottom right otherwise
        let lx = LEFT + pw - 150.0;
        let ly = if kind == CurveKind::Pr { TOP + 15.0 + 15.0 * i as f64 } else { TOP + ph - 15.0 * (reports.len() - i) as f64 };
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#, lx, ly - 4.0, lx + 18.0, ly - 4.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, lx + 24.0, esc(name));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use bkpred_core::eval::evaluate;

    fn two() -> Vec<(String, MetricsReport)> {
        let y = [true, false, true, false];
        vec![
            ("a".into(), evaluate(&[0.9, 0.8, 0.7, 0.6], &y, 2).unwrap()),
            ("b<&>".into(), evaluate(&[0.1, 0.8, 0.7, 0.6], &y, 2).unwrap()),
        ]
    }

    #[test]
    fn two_models_two_rows_three_svgs() {
        let dir = tempfile::tempdir().unwrap();
        let files = render_report(&two(), dir.path()).unwrap();
        assert_eq!(files.iter().filter(|p| p.extension().unwrap() == "svg").count(), 3);
        let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "model,roc_auc,ap,recall@2,cap_ratio,n,n_pos,ties_at_k");
        assert!(lines[1].starts_with("a,0.75,"));
        assert!(render_svg(&two(), CurveKind::Roc).contains("b&lt;&amp;&gt;"));
    }

    #[test]
    fn empty_list_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        render_report(&[], dir.path()).unwrap();
        for f in ["metrics.csv", "pr.csv", "roc.csv", "cap.csv"] {
            assert_eq!(std::fs::read_to_string(dir.path().join(f)).unwrap().lines().count(), 1, "{f}");
        }
    }

    #[test]
    fn svg_is_byte_identical() {
        for k in CurveKind::ALL {
            assert_eq!(render_svg(&two(), k), render_svg(&two(), k));
        }
    }
}
