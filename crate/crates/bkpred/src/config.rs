//! Run configuration (TOML). Every field has a default except the seed,
//! which must come from the file or `--seed`.

use std::path::{Path, PathBuf};

use bkpred_core::labeling::{BankruptcyCalendar, QualifyRule, SplitBounds};
use bkpred_core::llm::AbsentScore;
use bkpred_core::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::train::{Family, ModelSpec};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub fundamentals: Option<PathBuf>,
    pub calendar: Option<PathBuf>,
    /// Absent: the bundled CPI-U table.
    pub deflator: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalendarSettings {
    /// First and last day the bankruptcy calendar is known to be complete.
    pub coverage: (NaiveDate, NaiveDate),
}

impl Default for CalendarSettings {
    fn default() -> Self {
        Self { coverage: BankruptcyCalendar::default_coverage() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub k: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self { k: bkpred_core::eval::DEFAULT_K }
    }
}

/// Hyperparameter grids. Each list is one axis; the grid is their cartesian
/// product in declaration order. An oversampling ratio of 0 disables
/// oversampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogregGrid {
    pub lambda: Vec<f64>,
    pub oversample_ratio: Vec<f64>,
}

impl Default for LogregGrid {
    fn default() -> Self {
        Self { lambda: vec![1e-4, 1e-3], oversample_ratio: vec![0.1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpGrid {
    pub hidden: Vec<Vec<usize>>,
    pub learning_rate: Vec<f64>,
    pub lambda: Vec<f64>,
    pub epochs: Vec<usize>,
    pub batch_size: Vec<usize>,
    pub oversample_ratio: Vec<f64>,
}

impl Default for MlpGrid {
    fn default() -> Self {
        Self {
            hidden: vec![vec![16]],
            learning_rate: vec![0.05],
            lambda: vec![1e-4],
            epochs: vec![30],
            batch_size: vec![128],
            oversample_ratio: vec![0.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtGrid {
    pub n_trees: Vec<usize>,
    pub eta: Vec<f64>,
    pub subsample: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub lambda_leaf: Vec<f64>,
    pub min_child_weight: Vec<f64>,
    pub oversample_ratio: Vec<f64>,
}

impl Default for GbtGrid {
    fn default() -> Self {
        Self {
            n_trees: vec![100],
            eta: vec![0.1],
            subsample: vec![0.8],
            max_depth: vec![3],
            lambda_leaf: vec![1.0],
            min_child_weight: vec![1.0],
            oversample_ratio: vec![0.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TfidfGrid {
    pub ngram_range: Vec<(usize, usize)>,
    pub min_df: Vec<u64>,
    pub lambda: Vec<f64>,
    pub class_weighting: Vec<bool>,
}

impl Default for TfidfGrid {
    fn default() -> Self {
        Self { ngram_range: vec![(1, 1), (1, 2)], min_df: vec![2], lambda: vec![1e-4, 1e-3], class_weighting: vec![true] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelGrids {
    /// Families trained by the end-to-end run.
    pub families: Vec<Family>,
    pub logreg: LogregGrid,
    pub mlp: MlpGrid,
    pub gbt: GbtGrid,
    pub tfidf: TfidfGrid,
}

impl Default for ModelGrids {
    fn default() -> Self {
        Self {
            families: vec![Family::Logreg, Family::Mlp, Family::Gbt, Family::Tfidf],
            logreg: LogregGrid::default(),
            mlp: MlpGrid::default(),
            gbt: GbtGrid::default(),
            tfidf: TfidfGrid::default(),
        }
    }
}

fn ratio(r: f64) -> Option<f64> {
    (r != 0.0).then_some(r)
}

impl ModelGrids {
    pub fn expand(&self, family: Family) -> Vec<ModelSpec> {
        let mut out = Vec::new();
        match family {
            Family::Logreg => {
                let g = &self.logreg;
                for &lambda in &g.lambda {
                    for &r in &g.oversample_ratio {
                        out.push(ModelSpec::Logreg { lambda, oversample_ratio: ratio(r) });
                    }
                }
            }
            Family::Mlp => {
                let g = &self.mlp;
                for hidden in &g.hidden {
                    for &learning_rate in &g.learning_rate {
                        for &lambda in &g.lambda {
                            for &epochs in &g.epochs {
                                for &batch_size in &g.batch_size {
                                    for &r in &g.oversample_ratio {
                                        out.push(ModelSpec::Mlp {
                                            hidden: hidden.clone(),
                                            learning_rate,
                                            lambda,
                                            epochs,
                                            batch_size,
                                            oversample_ratio: ratio(r),
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Family::Gbt => {
                let g = &self.gbt;
                for &n_trees in &g.n_trees {
                    for &eta in &g.eta {
                        for &subsample in &g.subsample {
                            for &max_depth in &g.max_depth {
                                for &lambda_leaf in &g.lambda_leaf {
                                    for &min_child_weight in &g.min_child_weight {
                                        for &r in &g.oversample_ratio {
                                            out.push(ModelSpec::Gbt {
                                                n_trees,
                                                eta,
                                                subsample,
                                                max_depth,
                                                lambda_leaf,
                                                min_child_weight,
                                                oversample_ratio: ratio(r),
                                            });
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Family::Tfidf => {
                let g = &self.tfidf;
                for &ngram_range in &g.ngram_range {
                    for &min_df in &g.min_df {
                        for &lambda in &g.lambda {
                            for &class_weighting in &g.class_weighting {
                                out.push(ModelSpec::Tfidf { ngram_range, min_df, lambda, class_weighting });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSettings {
    /// Chat-completion API root; requests go to `<base_url>/chat/completions`.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: String,
    /// Prompt template file containing `{mdna}`; absent: the built-in template.
    pub template: Option<PathBuf>,
    pub max_tokens: usize,
    pub concurrency: usize,
    pub requests_per_second: f64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
    /// Size of the random test sample and of the balanced train sample.
    pub sample_size: usize,
    pub n_shuffles: usize,
    pub absent: AbsentScore,
}

impl Default for LlmSettings {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-3.5-turbo".into(),
            token_env: "OPENAI_API_KEY".into(),
            template: None,
            max_tokens: 3500,
            concurrency: 4,
            requests_per_second: 2.0,
            max_retries: 3,
            backoff_ms: 1000,
            timeout_secs: 120,
            sample_size: 1000,
            n_shuffles: 50,
            absent: AbsentScore::Exclude,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub paths: Paths,
    pub split: SplitBounds,
    pub qualify: QualifyRule,
    pub calendar: CalendarSettings,
    pub eval: EvalSettings,
    pub models: ModelGrids,
    pub llm: LlmSettings,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("a seed is required (config `seed` or --seed)".into()))
    }

    /// Checks values that would otherwise fail deep inside a stage.
    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.split.train_last_year >= self.split.validation_last_year {
            return bad("split.train_last_year must precede split.validation_last_year");
        }
        if self.eval.k == 0 {
            return bad("eval.k must be positive");
        }
        if self.calendar.coverage.0 > self.calendar.coverage.1 {
            return bad("calendar.coverage is empty");
        }
        if !(self.qualify.assets_scale > 0.0) || !(self.qualify.threshold_1980 >= 0.0) {
            return bad("qualify.assets_scale must be positive and threshold_1980 nonnegative");
        }
        for f in &self.models.families {
            if self.models.expand(*f).is_empty() {
                return Err(Error::Config(format!("the {} grid is empty", f.as_str())));
            }
        }
        let all_ratios = self.models.logreg.oversample_ratio.iter().chain(&self.models.mlp.oversample_ratio).chain(&self.models.gbt.oversample_ratio);
        for &r in all_ratios {
            if !(0.0..=1.0).contains(&r) {
                return bad("oversample ratios must lie in [0, 1] (0 disables oversampling)");
            }
        }
        if self.llm.concurrency == 0 || !(self.llm.requests_per_second > 0.0) {
            return bad("llm.concurrency and llm.requests_per_second must be positive");
        }
        Ok(())
    }

    /// Paths that must exist for a stage; missing ones are config errors.
    pub fn require(&self, what: &str, p: &Option<PathBuf>) -> Result<PathBuf> {
        let p = p.clone().ok_or_else(|| Error::Config(format!("no {what} path configured")))?;
        if !p.exists() {
            return Err(Error::Config(format!("{what} path {} does not exist", p.display())));
        }
        Ok(p)
    }

    /// SHA-256 of the settings, paths excluded, so that moving the inputs
    /// does not change the hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.paths = Paths::default();
        let json = serde_json::to_vec(&c).expect("configs always serialize");
        hex::encode(Sha256::digest(json))
    }
}
