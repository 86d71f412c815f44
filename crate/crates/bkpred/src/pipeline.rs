//! Pipeline stages. Each stage exists twice: as a function on in-memory
//! values, and as a file stage that reads its inputs from the output
//! directory (or the configured paths), writes its outputs there and leaves a
//! manifest. [`run`] chains the in-memory functions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bkpred_core::corpus::{corpus_stats, CorpusStats, FilingDocument};
use bkpred_core::ensemble::{check_disjoint, fit_meta, predict_meta, MetaModel};
use bkpred_core::eval::{evaluate, MetricsReport};
use bkpred_core::features::{fit_scaler, ScalerState};
use bkpred_core::labeling::{
    dataset_stats, label_records, split, BankruptcyCalendar, DatasetStats, Deflator, LabelReport, LabeledExample,
    Split, SplitIndices,
};
use bkpred_core::linkage::{filter_fundamentals, match_records, FundamentalsRecord, MatchBasis, MatchOutcome};
use bkpred_core::llm::{balanced_sample, random_sample, shuffle_eval, LlmResponseRecord, ShuffleConfig, ShuffleEvalResult};
use bkpred_core::seed::derive_seed;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::dataset::{Dataset, Part};
use crate::error::{Error, Result};
use crate::io::corpus::{load_corpus, write_corpus};
use crate::io::features::{read_dataset, write_dense, write_ratios, write_texts};
use crate::io::fundamentals::load_fundamentals;
use crate::io::records::{resolve_labeled, resolve_links, LabeledRow, LinkRow};
use crate::io::scores::{join_labels, read_labels, read_scores, write_scores};
use crate::io::{read_json, read_jsonl, tables, write_json, write_jsonl, SkipReport};
use crate::manifest::Manifest;
use crate::report::{render_report, write_metrics_csv};
use crate::train::{fit, tune, Family, ModelBundle, TuneResult};
use crate::transport::{collect, CollectConfig, CollectReport, Transport};

/// File names inside the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub out: PathBuf,
}

impl Layout {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self { out: out.into() }
    }

    fn f(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn filings(&self) -> PathBuf {
        self.f("filings.jsonl")
    }
    pub fn ingest_report(&self) -> PathBuf {
        self.f("ingest_report.json")
    }
    pub fn corpus_stats(&self) -> PathBuf {
        self.f("corpus_stats.json")
    }
    pub fn state_counts(&self) -> PathBuf {
        self.f("state_counts.csv")
    }
    pub fn links(&self) -> PathBuf {
        self.f("links.jsonl")
    }
    pub fn link_report(&self) -> PathBuf {
        self.f("link_report.json")
    }
    pub fn labeled(&self) -> PathBuf {
        self.f("labeled.jsonl")
    }
    pub fn label_report(&self) -> PathBuf {
        self.f("label_report.json")
    }
    pub fn split_report(&self) -> PathBuf {
        self.f("split_report.json")
    }
    pub fn ratios(&self) -> PathBuf {
        self.f("ratios.csv")
    }
    pub fn texts(&self) -> PathBuf {
        self.f("mdna.jsonl")
    }
    pub fn scaler(&self) -> PathBuf {
        self.f("scaler.json")
    }
    pub fn scaled(&self) -> PathBuf {
        self.f("scaled.csv")
    }
    pub fn tune(&self, f: Family) -> PathBuf {
        self.f(&format!("tune.{}.json", f.as_str()))
    }
    /// Best grid point fitted on the training split only.
    pub fn tuned_model(&self, f: Family) -> PathBuf {
        self.f(&format!("model.{}.train.json", f.as_str()))
    }
    /// Best grid point refitted on the given part.
    pub fn model(&self, f: Family, part: Part) -> PathBuf {
        match part {
            Part::FullTrain => self.f(&format!("model.{}.json", f.as_str())),
            p => self.f(&format!("model.{}.{}.json", f.as_str(), p.as_str())),
        }
    }
    pub fn scores(&self, name: &str, part: Part) -> PathBuf {
        self.f(&format!("scores.{name}.{}.csv", part.as_str()))
    }
    pub fn meta_model(&self) -> PathBuf {
        self.f("ensemble_meta.json")
    }
    pub fn metrics_json(&self, name: &str) -> PathBuf {
        self.f(&format!("metrics.{name}.json"))
    }
    pub fn metrics_csv(&self) -> PathBuf {
        self.f("metrics.csv")
    }
    pub fn report_dir(&self) -> PathBuf {
        self.f("report")
    }
    pub fn stats(&self) -> PathBuf {
        self.f("stats.json")
    }
    pub fn llm_responses(&self, sample: LlmSample) -> PathBuf {
        self.f(&format!("llm_responses.{}.jsonl", sample.as_str()))
    }
    pub fn llm_collect_report(&self, sample: LlmSample) -> PathBuf {
        self.f(&format!("llm_collect.{}.json", sample.as_str()))
    }
    pub fn llm_eval(&self, sample: LlmSample) -> PathBuf {
        self.f(&format!("llm_eval.{}.json", sample.as_str()))
    }
}

// ---- in-memory stages ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub n_filings: usize,
    pub n_fundamentals: usize,
    pub n_fundamentals_10k: usize,
    pub n_linked: usize,
    pub n_by_cik: usize,
    pub n_by_name: usize,
    pub n_unmatched_filings: usize,
    pub n_unmatched_fundamentals: usize,
}

/// Keeps 10-K fundamentals and links them to filings.
pub fn link(filings: Vec<FilingDocument>, fundamentals: Vec<FundamentalsRecord>) -> (MatchOutcome, LinkReport) {
    let n_filings = filings.len();
    let n_fundamentals = fundamentals.len();
    let kept: Vec<FundamentalsRecord> = filter_fundamentals(fundamentals).collect();
    let n_fundamentals_10k = kept.len();
    let out = match_records(filings, kept);
    let by = |b: MatchBasis| out.linked.iter().filter(|r| r.match_basis == b).count();
    let report = LinkReport {
        n_filings,
        n_fundamentals,
        n_fundamentals_10k,
        n_linked: out.linked.len(),
        n_by_cik: by(MatchBasis::Cik),
        n_by_name: by(MatchBasis::Name),
        n_unmatched_filings: out.unmatched_filings.len(),
        n_unmatched_fundamentals: out.unmatched_fundamentals.len(),
    };
    (out, report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub train_last_year: i32,
    pub validation_last_year: i32,
    pub train: DatasetStats,
    pub validation: DatasetStats,
    pub test: DatasetStats,
    pub full_train: DatasetStats,
}

impl SplitReport {
    pub fn of(examples: &[LabeledExample], idx: &SplitIndices, cfg: &RunConfig) -> Self {
        let st = |rows: &[usize]| dataset_stats(rows.iter().map(|&i| &examples[i]));
        Self {
            train_last_year: cfg.split.train_last_year,
            validation_last_year: cfg.split.validation_last_year,
            train: st(&idx.train),
            validation: st(&idx.validation),
            test: st(&idx.test),
            full_train: st(&idx.full_train),
        }
    }
}

/// Qualifies, labels and splits linked records.
pub fn label(
    linked: Vec<bkpred_core::linkage::LinkedRecord>,
    deflator: &Deflator,
    calendar: &BankruptcyCalendar,
    cfg: &RunConfig,
) -> Result<(Vec<LabeledExample>, LabelReport, SplitReport)> {
    let (mut ex, report) = label_records(linked, deflator, calendar, &cfg.qualify)?;
    let idx = split(&mut ex, &cfg.split);
    let sr = SplitReport::of(&ex, &idx, cfg);
    Ok((ex, report, sr))
}

/// Scaler fitted on the training split, as written by `featurize`.
pub fn train_scaler(ds: &Dataset) -> Result<ScalerState> {
    let rows: Vec<_> = ds.rows_in(Part::Train.splits()).into_iter().map(|i| ds.ratios[i]).collect();
    Ok(fit_scaler(&rows)?)
}

/// Tunes one family on train/validation, then refits the winner on
/// train+validation. Returns the tuning record, the train-only winner and the
/// refitted model.
pub fn tune_and_refit(ds: &Dataset, family: Family, cfg: &RunConfig) -> Result<(TuneResult, ModelBundle, ModelBundle)> {
    let seed = derive_seed(cfg.seed()?, family.as_str());
    let train = ds.rows_in(Part::Train.splits());
    let val = ds.rows_in(Part::Validation.splits());
    let (tr, on_train) = tune(&cfg.models.expand(family), ds, &train, &val, seed)?;
    let full = fit(&tr.best, ds, &ds.rows_in(Part::FullTrain.splits()), seed)?;
    Ok((tr, on_train, full))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    /// Families of the two base models, in meta-feature order.
    pub bases: [Family; 2],
    pub meta: MetaModel,
}

/// Fits the meta-classifier on validation scores of two train-only base
/// models and scores `part` with it.
pub fn ensemble(ds: &Dataset, a: &ModelBundle, b: &ModelBundle, part: Part) -> Result<(EnsembleModel, Vec<f64>)> {
    let val = ds.rows_in(Part::Validation.splits());
    let ids = ds.ids_of(&val);
    let base_ids = a.training_ids.iter().chain(&b.training_ids).map(String::as_str);
    check_disjoint(ids.iter().map(String::as_str), base_ids)?;
    let meta = fit_meta(&a.score(ds, &val)?, &b.score(ds, &val)?, &ds.labels_of(&val))?;
    let rows = ds.rows_in(part.splits());
    let scores = predict_meta(&meta, &a.score(ds, &rows)?, &b.score(ds, &rows)?);
    Ok((EnsembleModel { bases: [a.spec.family(), b.spec.family()], meta }, scores))
}

/// Everything [`run`] produces, in memory.
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub corpus_stats: CorpusStats,
    pub link_report: LinkReport,
    pub label_report: LabelReport,
    pub split_report: SplitReport,
    pub dataset: Dataset,
    pub tuning: Vec<TuneResult>,
    /// Test-split scores per model name, in dataset row order.
    pub test_ids: Vec<String>,
    pub test_scores: Vec<(String, Vec<f64>)>,
    pub metrics: Vec<(String, MetricsReport)>,
}

/// The whole pipeline in one process: nothing is read back from disk between
/// stages. Writes the test scores, metrics and report into `layout`.
pub fn run(cfg: &RunConfig, layout: &Layout) -> Result<RunOutputs> {
    cfg.validate()?;
    let (filings, _) = load_corpus(&cfg.require("corpus", &cfg.paths.corpus)?)?;
    let (funds, _) = load_fundamentals(&cfg.require("fundamentals", &cfg.paths.fundamentals)?)?;
    let calendar = tables::load_calendar(&cfg.require("calendar", &cfg.paths.calendar)?, cfg.calendar.coverage)?;
    let deflator = load_deflator(cfg)?;

    let cs = corpus_stats(&filings);
    let (linked, link_report) = link(filings, funds);
    let (examples, label_report, split_report) = label(linked.linked, &deflator, &calendar, cfg)?;
    let ds = Dataset::from_examples(&examples);

    let test = ds.rows_in(Part::Test.splits());
    let test_ids = ds.ids_of(&test);
    let y_test = ds.labels_of(&test);
    let mut tuning = Vec::new();
    let mut on_train = BTreeMap::new();
    let mut test_scores = Vec::new();
    for &family in &cfg.models.families {
        let (tr, m_train, m_full) = tune_and_refit(&ds, family, cfg)?;
        test_scores.push((family.as_str().to_string(), m_full.score(&ds, &test)?));
        tuning.push(tr);
        on_train.insert(family, m_train);
    }
    if let (Some(a), Some(b)) = (on_train.get(&Family::Gbt), on_train.get(&Family::Tfidf)) {
        let (_, s) = ensemble(&ds, a, b, Part::Test)?;
        test_scores.push(("ensemble".into(), s));
    }
    let mut metrics = Vec::new();
    for (name, s) in &test_scores {
        write_scores(&layout.scores(name, Part::Test), &test_ids, s)?;
        metrics.push((name.clone(), evaluate(s, &y_test, cfg.eval.k)?));
    }
    write_metrics_csv(&layout.metrics_csv(), &metrics)?;
    render_report(&metrics, &layout.report_dir())?;
    Ok(RunOutputs {
        corpus_stats: cs,
        link_report,
        label_report,
        split_report,
        dataset: ds,
        tuning,
        test_ids,
        test_scores,
        metrics,
    })
}

fn load_deflator(cfg: &RunConfig) -> Result<Deflator> {
    match &cfg.paths.deflator {
        Some(_) => tables::load_deflator(&cfg.require("deflator", &cfg.paths.deflator)?),
        None => Ok(Deflator::cpi_u()),
    }
}

// ---- file stages ----

/// Context shared by the file stages.
pub struct Stage<'a> {
    pub cfg: &'a RunConfig,
    pub layout: &'a Layout,
}

fn existing(p: PathBuf, what: &str) -> Result<PathBuf> {
    if p.exists() {
        Ok(p)
    } else {
        Err(Error::Usage(format!("{what} not found at {}; run the producing stage first", p.display())))
    }
}

impl Stage<'_> {
    fn manifest(&self, command: &str) -> Result<Manifest> {
        Manifest::new(command, self.cfg)
    }

    fn finish(&self, mut m: Manifest, outputs: &[PathBuf]) -> Result<PathBuf> {
        for p in outputs {
            if p.is_dir() {
                let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                    .map_err(|e| Error::io(p, e))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .collect();
                files.sort();
                for f in files {
                    m.output(&self.layout.out, &f)?;
                }
            } else {
                m.output(&self.layout.out, p)?;
            }
        }
        m.write(&self.layout.out)
    }

    fn filings(&self, m: &mut Manifest) -> Result<Vec<FilingDocument>> {
        let p = existing(self.layout.filings(), "filings")?;
        m.input("filings", &p)?;
        Ok(load_corpus(&p)?.0)
    }

    /// 10-K fundamentals only, so that record ids are unambiguous.
    fn fundamentals(&self, m: &mut Manifest) -> Result<Vec<FundamentalsRecord>> {
        let p = self.cfg.require("fundamentals", &self.cfg.paths.fundamentals)?;
        m.input("fundamentals", &p)?;
        Ok(filter_fundamentals(load_fundamentals(&p)?.0).collect())
    }

    fn labeled(&self, m: &mut Manifest) -> Result<Vec<LabeledExample>> {
        let rows: Vec<LabeledRow> = {
            let p = existing(self.layout.labeled(), "labelled records")?;
            m.input("labeled", &p)?;
            read_jsonl(&p)?
        };
        let filings = self.filings(m)?;
        let funds = self.fundamentals(m)?;
        resolve_labeled(&rows, &filings, &funds)
    }

    pub fn dataset(&self, m: &mut Manifest) -> Result<Dataset> {
        let r = existing(self.layout.ratios(), "ratios")?;
        let t = existing(self.layout.texts(), "MD&A texts")?;
        m.input("ratios", &r)?;
        m.input("texts", &t)?;
        read_dataset(&r, &t)
    }

    pub fn ingest(&self) -> Result<SkipReport> {
        let mut m = self.manifest("ingest")?;
        let src = self.cfg.require("corpus", &self.cfg.paths.corpus)?;
        m.input("corpus", &src)?;
        let (docs, skipped) = load_corpus(&src)?;
        let l = self.layout;
        write_corpus(&l.filings(), &docs)?;
        write_json(&l.ingest_report(), &skipped)?;
        let cs = corpus_stats(&docs);
        write_json(&l.corpus_stats(), &cs)?;
        tables::write_state_counts(&l.state_counts(), &cs.state_counts)?;
        self.finish(m, &[l.filings(), l.ingest_report(), l.corpus_stats(), l.state_counts()])?;
        Ok(skipped)
    }

    pub fn link(&self) -> Result<LinkReport> {
        let mut m = self.manifest("link")?;
        let filings = self.filings(&mut m)?;
        let funds = self.fundamentals(&mut m)?;
        let (out, report) = link(filings, funds);
        let rows: Vec<LinkRow> = out.linked.iter().map(LinkRow::of).collect();
        write_jsonl(&self.layout.links(), &rows)?;
        write_json(&self.layout.link_report(), &report)?;
        self.finish(m, &[self.layout.links(), self.layout.link_report()])?;
        Ok(report)
    }

    pub fn label(&self) -> Result<LabelReport> {
        let mut m = self.manifest("label")?;
        let links: Vec<LinkRow> = {
            let p = existing(self.layout.links(), "links")?;
            m.input("links", &p)?;
            read_jsonl(&p)?
        };
        let filings = self.filings(&mut m)?;
        let funds = self.fundamentals(&mut m)?;
        let cal_path = self.cfg.require("calendar", &self.cfg.paths.calendar)?;
        m.input("calendar", &cal_path)?;
        let calendar = tables::load_calendar(&cal_path, self.cfg.calendar.coverage)?;
        if let Some(p) = &self.cfg.paths.deflator {
            m.input("deflator", p)?;
        }
        let deflator = load_deflator(self.cfg)?;
        let linked = resolve_links(&links, &filings, &funds)?;
        let (ex, report, sr) = label(linked, &deflator, &calendar, self.cfg)?;
        let rows: Vec<LabeledRow> = ex.iter().map(LabeledRow::of).collect();
        let l = self.layout;
        write_jsonl(&l.labeled(), &rows)?;
        write_json(&l.label_report(), &report)?;
        write_json(&l.split_report(), &sr)?;
        self.finish(m, &[l.labeled(), l.label_report(), l.split_report()])?;
        Ok(report)
    }

    /// Reassigns splits of the labelled records under the configured year
    /// boundaries.
    pub fn split(&self) -> Result<SplitReport> {
        let mut m = self.manifest("split")?;
        let mut ex = self.labeled(&mut m)?;
        let idx = split(&mut ex, &self.cfg.split);
        let sr = SplitReport::of(&ex, &idx, self.cfg);
        let rows: Vec<LabeledRow> = ex.iter().map(LabeledRow::of).collect();
        write_jsonl(&self.layout.labeled(), &rows)?;
        write_json(&self.layout.split_report(), &sr)?;
        self.finish(m, &[self.layout.labeled(), self.layout.split_report()])?;
        Ok(sr)
    }

    pub fn featurize(&self) -> Result<usize> {
        let mut m = self.manifest("featurize")?;
        let ex = self.labeled(&mut m)?;
        let ds = Dataset::from_examples(&ex);
        let l = self.layout;
        write_ratios(&l.ratios(), &ds)?;
        write_texts(&l.texts(), &ds)?;
        let scaler = train_scaler(&ds)?;
        write_json(&l.scaler(), &scaler)?;
        write_dense(&l.scaled(), &ds.ids, &scaler.transform(&ds.ratios)?)?;
        self.finish(m, &[l.ratios(), l.texts(), l.scaler(), l.scaled()])?;
        Ok(ds.len())
    }

    pub fn tune(&self, family: Family) -> Result<TuneResult> {
        let name = format!("tune.{}", family.as_str());
        let mut m = self.manifest(&name)?;
        let ds = self.dataset(&mut m)?;
        let seed = derive_seed(self.cfg.seed()?, family.as_str());
        let train = ds.rows_in(Part::Train.splits());
        let val = ds.rows_in(Part::Validation.splits());
        let (tr, model) = tune(&self.cfg.models.expand(family), &ds, &train, &val, seed)?;
        let l = self.layout;
        write_json(&l.tune(family), &tr)?;
        write_json(&l.tuned_model(family), &model)?;
        self.finish(m, &[l.tune(family), l.tuned_model(family)])?;
        Ok(tr)
    }

    /// Fits the tuned grid point (or the first grid point if the family was
    /// not tuned) on `part`.
    pub fn train(&self, family: Family, part: Part) -> Result<PathBuf> {
        let name = format!("train.{}.{}", family.as_str(), part.as_str());
        let mut m = self.manifest(&name)?;
        let ds = self.dataset(&mut m)?;
        let spec = match self.layout.tune(family) {
            p if p.exists() => {
                m.input("tune", &p)?;
                read_json::<TuneResult>(&p)?.best
            }
            _ => self.cfg.models.expand(family).into_iter().next().ok_or_else(|| Error::Config("empty grid".into()))?,
        };
        let seed = derive_seed(self.cfg.seed()?, family.as_str());
        let model = fit(&spec, &ds, &ds.rows_in(part.splits()), seed)?;
        let out = self.layout.model(family, part);
        write_json(&out, &model)?;
        self.finish(m, std::slice::from_ref(&out))?;
        Ok(out)
    }

    pub fn score(&self, model_path: &Path, name: &str, part: Part) -> Result<PathBuf> {
        let mut m = self.manifest(&format!("score.{name}.{}", part.as_str()))?;
        let ds = self.dataset(&mut m)?;
        m.input("model", model_path)?;
        let model: ModelBundle = read_json(model_path)?;
        let rows = ds.rows_in(part.splits());
        let scores = model.score(&ds, &rows)?;
        let out = self.layout.scores(name, part);
        write_scores(&out, &ds.ids_of(&rows), &scores)?;
        self.finish(m, std::slice::from_ref(&out))?;
        Ok(out)
    }

    pub fn ensemble(&self, a: &Path, b: &Path, part: Part) -> Result<PathBuf> {
        let mut m = self.manifest(&format!("ensemble.{}", part.as_str()))?;
        let ds = self.dataset(&mut m)?;
        m.input("base_a", a)?;
        m.input("base_b", b)?;
        let (ma, mb): (ModelBundle, ModelBundle) = (read_json(a)?, read_json(b)?);
        let (em, scores) = ensemble(&ds, &ma, &mb, part)?;
        let out = self.layout.scores("ensemble", part);
        write_json(&self.layout.meta_model(), &em)?;
        write_scores(&out, &ds.ids_of(&ds.rows_in(part.splits())), &scores)?;
        self.finish(m, &[self.layout.meta_model(), out.clone()])?;
        Ok(out)
    }

    /// Evaluates named score files against `labels` (labelled JSONL or a
    /// `record_id,label` CSV) and writes per-model metrics and `metrics.csv`.
    pub fn evaluate(&self, scores: &[(String, PathBuf)], labels: &Path) -> Result<Vec<(String, MetricsReport)>> {
        let mut m = self.manifest("evaluate")?;
        m.input("labels", labels)?;
        let truth = read_labels(labels)?;
        let mut reports = Vec::new();
        let mut outs = Vec::new();
        for (name, p) in scores {
            m.input(&format!("scores.{name}"), p)?;
            let (ids, s) = read_scores(p)?;
            let y = join_labels(&ids, &truth)?;
            let r = evaluate(&s, &y, self.cfg.eval.k)?;
            let out = self.layout.metrics_json(name);
            write_json(&out, &r)?;
            outs.push(out);
            reports.push((name.clone(), r));
        }
        write_metrics_csv(&self.layout.metrics_csv(), &reports)?;
        outs.push(self.layout.metrics_csv());
        self.finish(m, &outs)?;
        Ok(reports)
    }

    pub fn report(&self, metrics: &[(String, PathBuf)]) -> Result<Vec<PathBuf>> {
        let mut m = self.manifest("report")?;
        let mut reports = Vec::new();
        for (name, p) in metrics {
            m.input(&format!("metrics.{name}"), p)?;
            reports.push((name.clone(), read_json::<MetricsReport>(p)?));
        }
        let files = render_report(&reports, &self.layout.report_dir())?;
        self.finish(m, &files)?;
        Ok(files)
    }

    pub fn stats(&self) -> Result<Stats> {
        let mut m = self.manifest("stats")?;
        let ex = self.labeled(&mut m)?;
        let filings = self.filings(&mut m)?;
        let st = Stats {
            corpus: corpus_stats(&filings),
            labelled: dataset_stats(&ex),
            splits: [Split::Train, Split::Validation, Split::Test]
                .iter()
                .map(|&s| (s.as_str().to_string(), dataset_stats(ex.iter().filter(|e| e.split == s))))
                .collect(),
        };
        write_json(&self.layout.stats(), &st)?;
        self.finish(m, &[self.layout.stats()])?;
        Ok(st)
    }

    pub fn llm_collect(&self, sample: LlmSample, transport: &dyn Transport) -> Result<CollectReport> {
        let mut m = self.manifest(&format!("llm-collect.{}", sample.as_str()))?;
        let ds = self.dataset(&mut m)?;
        if let Some(t) = &self.cfg.llm.template {
            m.input("template", t)?;
        }
        let rows = sample.rows(&ds, self.cfg)?;
        let docs: Vec<(String, String)> = rows.iter().map(|&i| (ds.ids[i].clone(), ds.texts[i].clone())).collect();
        let records = collect(&docs, transport, &CollectConfig::from_settings(&self.cfg.llm)?);
        let report = CollectReport::of(&records);
        let l = self.layout;
        write_jsonl(&l.llm_responses(sample), &records)?;
        write_json(&l.llm_collect_report(sample), &report)?;
        self.finish(m, &[l.llm_responses(sample), l.llm_collect_report(sample)])?;
        Ok(report)
    }

    pub fn llm_eval(&self, sample: LlmSample, responses: Option<&Path>) -> Result<ShuffleEvalResult> {
        let mut m = self.manifest(&format!("llm-eval.{}", sample.as_str()))?;
        let ds = self.dataset(&mut m)?;
        let p = responses.map(Path::to_path_buf).unwrap_or_else(|| self.layout.llm_responses(sample));
        let p = existing(p, "LLM responses")?;
        m.input("responses", &p)?;
        let records: Vec<LlmResponseRecord> = read_jsonl(&p)?;
        let labels: BTreeMap<String, bool> = ds.ids.iter().cloned().zip(ds.labels.iter().copied()).collect();
        let ids: Vec<String> = records.iter().map(|r| r.record_id.clone()).collect();
        let y = join_labels(&ids, &labels)?;
        let scores: Vec<Option<u8>> = records.iter().map(|r| r.score).collect();
        let cfg = ShuffleConfig {
            n_shuffles: self.cfg.llm.n_shuffles,
            seed: derive_seed(self.cfg.seed()?, "llm-shuffle"),
            k: self.cfg.eval.k,
            absent: self.cfg.llm.absent,
        };
        let r = shuffle_eval(&scores, &y, &cfg)?;
        write_json(&self.layout.llm_eval(sample), &r)?;
        self.finish(m, &[self.layout.llm_eval(sample)])?;
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub corpus: CorpusStats,
    pub labelled: DatasetStats,
    pub splits: BTreeMap<String, DatasetStats>,
}

/// Which records the LLM is asked about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum LlmSample {
    /// Seeded random sample of the test split.
    TestRandom,
    /// Every training positive plus as many random training negatives.
    TrainBalanced,
}

impl LlmSample {
    pub fn as_str(self) -> &'static str {
        match self {
            LlmSample::TestRandom => "test_random",
            LlmSample::TrainBalanced => "train_balanced",
        }
    }

    /// Dataset rows in the sample, capped at `llm.sample_size`.
    pub fn rows(self, ds: &Dataset, cfg: &RunConfig) -> Result<Vec<usize>> {
        let seed = derive_seed(cfg.seed()?, self.as_str());
        let n = cfg.llm.sample_size;
        Ok(match self {
            LlmSample::TestRandom => {
                let test = ds.rows_in(Part::Test.splits());
                random_sample(test.len(), n, seed).into_iter().map(|i| test[i]).collect()
            }
            LlmSample::TrainBalanced => {
                let train = ds.rows_in(Part::Train.splits());
                let picked = balanced_sample(&ds.labels_of(&train), seed);
                let mut rows: Vec<usize> = picked.into_iter().map(|i| train[i]).collect();
                if rows.len() > n {
                    let keep = random_sample(rows.len(), n, derive_seed(seed, "cap"));
                    rows = keep.into_iter().map(|i| rows[i]).collect();
                }
                rows
            }
        })
    }
}
