//! The modelling table: one row per qualified, labelled filing.

use bkpred_core::features::{compute_ratios, FeatureVector};
use bkpred_core::labeling::{LabeledExample, Split};

/// MD&A is item 7.
pub const MDNA_ITEM: u8 = 7;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub labels: Vec<bool>,
    pub splits: Vec<Split>,
    pub ratios: Vec<FeatureVector>,
    pub texts: Vec<String>,
}

impl Dataset {
    /// Qualified examples in input order.
    pub fn from_examples(examples: &[LabeledExample]) -> Self {
        let mut ds = Self::default();
        for e in examples {
            let Some(label) = e.label else { continue };
            ds.ids.push(e.record_id());
            ds.labels.push(label);
            ds.splits.push(e.split);
            ds.ratios.push(compute_ratios(&e.linked.fundamentals));
            ds.texts.push(e.linked.filing.items.get(MDNA_ITEM).to_string());
        }
        ds
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn rows_in(&self, splits: &[Split]) -> Vec<usize> {
        (0..self.len()).filter(|&i| splits.contains(&self.splits[i])).collect()
    }

    pub fn labels_of(&self, rows: &[usize]) -> Vec<bool> {
        rows.iter().map(|&i| self.labels[i]).collect()
    }

    pub fn ids_of(&self, rows: &[usize]) -> Vec<String> {
        rows.iter().map(|&i| self.ids[i].clone()).collect()
    }
}

/// Named row sets used for fitting and scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Train,
    Validation,
    Test,
    /// Train followed by validation.
    FullTrain,
}

impl Part {
    pub fn splits(self) -> &'static [Split] {
        match self {
            Part::Train => &[Split::Train],
            Part::Validation => &[Split::Validation],
            Part::Test => &[Split::Test],
            Part::FullTrain => &[Split::Train, Split::Validation],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Part::Train => "train",
            Part::Validation => "validation",
            Part::Test => "test",
            Part::FullTrain => "full_train",
        }
    }
}
