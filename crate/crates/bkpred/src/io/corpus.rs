//! Corpus JSONL: one filing per line with keys `cik`, `company`,
//! `filing_date`, `fiscal_year_end`, `sic`, optional `state`, and either
//! `item_1`..`item_15` or `raw_text`. Lettered keys such as `item_7A` are
//! appended to their parent item.

use std::fs::File;
use std::io::{BufRead, BufReader, Lines, Write};
use std::path::{Path, PathBuf};

use bkpred_core::corpus::{parse_filing, FilingDocument, FilingMetadata, Items};
use serde::ser::{SerializeMap, Serializer};
use serde_json::{Map, Value};

use super::{create, finish, open, parse_date, SkipReport};
use crate::error::{Error, Result};

/// Streaming reader over one JSONL file. Malformed records are recorded in
/// [`CorpusReader::report`] and skipped; I/O failures end the stream.
pub struct CorpusReader<R> {
    lines: Lines<R>,
    line_no: usize,
    report: SkipReport,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R) -> Self {
        Self { lines: reader.lines(), line_no: 0, report: SkipReport::default() }
    }

    pub fn report(&self) -> &SkipReport {
        &self.report
    }

    pub fn into_report(self) -> SkipReport {
        self.report
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = std::io::Result<FilingDocument>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e)),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            match parse_line(&line) {
                Ok(doc) => {
                    self.report.n_loaded += 1;
                    return Some(Ok(doc));
                }
                Err(reason) => self.report.skip(self.line_no, reason),
            }
        }
    }
}

pub fn open_corpus(path: &Path) -> Result<CorpusReader<BufReader<File>>> {
    Ok(CorpusReader::new(open(path)?))
}

/// Files making up a corpus: the path itself, or the `*.jsonl` files of a
/// directory in name order.
pub fn corpus_files(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

/// Visits every loadable document of a file or directory in order. Skip
/// reports are merged; line numbers of later files are offset by the line
/// counts of earlier ones.
pub fn for_each_document(path: &Path, mut f: impl FnMut(FilingDocument) -> Result<()>) -> Result<SkipReport> {
    let mut total = SkipReport::default();
    let mut offset = 0;
    for file in corpus_files(path)? {
        let mut reader = open_corpus(&file)?;
        for doc in reader.by_ref() {
            f(doc.map_err(|e| Error::io(&file, e))?)?;
        }
        let lines = reader.line_no;
        let r = reader.into_report();
        total.n_loaded += r.n_loaded;
        total.n_skipped += r.n_skipped;
        total.skipped.extend(r.skipped.into_iter().map(|mut s| {
            s.line += offset;
            s
        }));
        offset += lines;
    }
    Ok(total)
}

pub fn load_corpus(path: &Path) -> Result<(Vec<FilingDocument>, SkipReport)> {
    let mut docs = Vec::new();
    let report = for_each_document(path, |d| {
        docs.push(d);
        Ok(())
    })?;
    Ok((docs, report))
}

fn get_str<'a>(obj: &'a Map<String, Value>, key: &str) -> std::result::Result<&'a str, String> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(format!("`{key}` is not a string")),
        None => Err(format!("missing `{key}`")),
    }
}

fn get_cik(obj: &Map<String, Value>) -> std::result::Result<String, String> {
    match obj.get("cik") {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) if n.is_u64() => Ok(n.to_string()),
        Some(Value::Null) | None => Ok(String::new()),
        Some(_) => Err("`cik` is neither a string nor an integer".into()),
    }
}

fn get_sic(obj: &Map<String, Value>) -> std::result::Result<Option<u16>, String> {
    let bad = || "`sic` is not a code in 0..=9999".to_string();
    let v = match obj.get("sic") {
        None | Some(Value::Null) => return Ok(None),
        Some(Value::Number(n)) => n.as_u64().ok_or_else(bad)?,
        Some(Value::String(s)) if s.trim().is_empty() => return Ok(None),
        Some(Value::String(s)) => s.trim().parse::<u64>().map_err(|_| bad())?,
        Some(_) => return Err(bad()),
    };
    u16::try_from(v).ok().filter(|&v| v <= 9999).map(Some).ok_or_else(bad)
}

/// `item_7` → (7, ""), `item_7A` → (7, "A").
fn item_key(key: &str) -> Option<(u8, &str)> {
    let rest = key.strip_prefix("item_")?;
    let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
    let n: u8 = rest[..digits].parse().ok()?;
    let suffix = &rest[digits..];
    ((1..=15).contains(&n) && suffix.bytes().all(|b| b.is_ascii_alphabetic())).then_some((n, suffix))
}

/// Parses one corpus line into a document.
pub fn parse_line(line: &str) -> std::result::Result<FilingDocument, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let Value::Object(obj) = value else {
        return Err("not a JSON object".into());
    };
    let state = match obj.get("state") {
        Some(Value::String(s)) if !s.trim().is_empty() => Some(s.trim().to_string()),
        _ => None,
    };
    let meta = FilingMetadata {
        cik: get_cik(&obj)?,
        company_name: get_str(&obj, "company")?.to_string(),
        filing_date: parse_date(get_str(&obj, "filing_date")?)?,
        fiscal_year_end: parse_date(get_str(&obj, "fiscal_year_end")?)?,
        sic_code: get_sic(&obj)?,
        state,
    };
    let mut keyed: Vec<(u8, &str, &str)> = Vec::new();
    for (k, v) in &obj {
        if let Some((n, suffix)) = item_key(k) {
            match v {
                Value::String(s) => keyed.push((n, suffix, s)),
                Value::Null => {}
                _ => return Err(format!("`{k}` is not a string")),
            }
        }
    }
    if keyed.is_empty() {
        return match obj.get("raw_text") {
            Some(Value::String(raw)) => parse_filing(raw, meta).map_err(|e| e.to_string()),
            _ => Err("neither item_N keys nor raw_text".into()),
        };
    }
    // parent items before their lettered parts
    keyed.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut items = Items::default();
    for (n, suffix, text) in keyed {
        if suffix.is_empty() || items.get(n).is_empty() {
            items.set(n, text.to_string());
        } else {
            let joined = format!("{}\n{}", items.get(n), text);
            items.set(n, joined);
        }
    }
    FilingDocument::from_items(meta, items).map_err(|e| e.to_string())
}

struct Line<'a>(&'a FilingDocument);

impl serde::Serialize for Line<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.0;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("cik", &d.cik)?;
        m.serialize_entry("company", &d.company_name)?;
        m.serialize_entry("filing_date", &d.filing_date.to_string())?;
        m.serialize_entry("fiscal_year_end", &d.fiscal_year_end.to_string())?;
        m.serialize_entry("sic", &d.sic_code)?;
        if let Some(st) = &d.state {
            m.serialize_entry("state", st)?;
        }
        for (n, text) in d.items.iter() {
            m.serialize_entry(&format!("item_{n}"), text)?;
        }
        m.end()
    }
}

/// Canonical single-line form of a document (pre-segmented items).
pub fn to_line(doc: &FilingDocument) -> String {
    serde_json::to_string(&Line(doc)).expect("documents always serialize")
}

pub fn write_corpus<'a, I>(path: &Path, docs: I) -> Result<()>
where
    I: IntoIterator<Item = &'a FilingDocument>,
{
    let mut w = create(path)?;
    for d in docs {
        w.write_all(to_line(d).as_bytes()).map_err(|e| Error::io(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}
