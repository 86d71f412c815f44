use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::matrix::{SparseMatrix, SparseVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TfidfConfig {
    /// Inclusive n-gram sizes `(lo, hi)`.
    pub ngram_range: (usize, usize),
    /// Terms seen in fewer training documents are dropped.
    pub min_df: u64,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        Self { ngram_range: (1, 1), min_df: 1 }
    }
}

/// Lowercased maximal alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn for_each_ngram(tokens: &[String], (lo, hi): (usize, usize), mut f: impl FnMut(&str)) {
    let mut buf = String::new();
    for n in lo..=hi {
        for w in tokens.windows(n) {
            buf.clear();
            for (k, t) in w.iter().enumerate() {
                if k > 0 {
                    buf.push(' ');
                }
                buf.push_str(t);
            }
            f(&buf);
        }
    }
}

/// Fitted vocabulary and document frequencies.
///
/// Columns are assigned in lexicographic term order. Weights are
/// `tf * (ln((1 + n_docs) / (1 + df)) + 1)` with raw counts as `tf`, and each
/// vector is L2-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfState {
    pub vocabulary: BTreeMap<String, usize>,
    /// Indexed by column.
    pub document_frequency: Vec<u64>,
    pub n_docs: u64,
    pub ngram_range: (usize, usize),
}

impl TfidfState {
    pub fn fit<S: AsRef<str>>(docs: &[S], config: &TfidfConfig) -> Result<Self, FeatureError> {
        let (lo, hi) = config.ngram_range;
        if lo == 0 || lo > hi {
            return Err(FeatureError::NgramRange(lo, hi));
        }
        if docs.is_empty() {
            return Err(FeatureError::EmptyFit);
        }
        let mut df: BTreeMap<String, u64> = BTreeMap::new();
        let mut seen: BTreeMap<String, ()> = BTreeMap::new();
        for doc in docs {
            seen.clear();
            let tokens = tokenize(doc.as_ref());
            for_each_ngram(&tokens, config.ngram_range, |g| {
                if !seen.contains_key(g) {
                    seen.insert(String::from(g), ());
                }
            });
            for g in seen.keys() {
                match df.get_mut(g.as_str()) {
                    Some(c) => *c += 1,
                    None => {
                        df.insert(g.clone(), 1);
                    }
                }
            }
        }
        let mut vocabulary = BTreeMap::new();
        let mut document_frequency = Vec::new();
        for (term, count) in df {
            if count >= config.min_df {
                vocabulary.insert(term, document_frequency.len());
                document_frequency.push(count);
            }
        }
        Ok(Self { vocabulary, document_frequency, n_docs: docs.len() as u64, ngram_range: config.ngram_range })
    }

    pub fn len(&self) -> usize {
        self.document_frequency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.document_frequency.is_empty()
    }

    pub fn df(&self, term: &str) -> Option<u64> {
        self.vocabulary.get(term).map(|&c| self.document_frequency[c])
    }

    pub fn idf_of_df(&self, df: u64) -> f64 {
        libm::log((1.0 + self.n_docs as f64) / (1.0 + df as f64)) + 1.0
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.df(term).map(|d| self.idf_of_df(d))
    }

    /// Out-of-vocabulary terms are ignored; a document with none left maps
    /// to the zero vector.
    pub fn vectorize(&self, doc: &str) -> SparseVec {
        let tokens = tokenize(doc);
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for_each_ngram(&tokens, self.ngram_range, |g| {
            if let Some(&c) = self.vocabulary.get(g) {
                *counts.entry(c).or_default() += 1.0;
            }
        });
        let mut v = SparseVec {
            indices: counts.keys().copied().collect(),
            values: counts.iter().map(|(&c, &tf)| tf * self.idf_of_df(self.document_frequency[c])).collect(),
        };
        let norm = v.norm();
        if norm > 0.0 {
            v.values.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    pub fn transform<S: AsRef<str>>(&self, docs: &[S]) -> SparseMatrix {
        let rows: Vec<SparseVec> = docs.iter().map(|d| self.vectorize(d.as_ref())).collect();
        SparseMatrix::from_rows(&rows, self.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idf_values() {
        let s = TfidfState::fit(&["a b", "a c"], &TfidfConfig::default()).unwrap();
        assert_eq!(s.df("a"), Some(2));
        assert_eq!(s.df("b"), Some(1));
        assert_eq!(s.idf("a"), Some(1.0));
        let idf_b = s.idf("b").unwrap();
        assert!((idf_b - (libm::log(1.5) + 1.0)).abs() < 1e-15);
        assert!((idf_b - 1.405_465_108).abs() < 1e-9);
    }

    #[test]
    fn out_of_vocabulary_is_zero() {
        let s = TfidfState::fit(&["a b", "a c"], &TfidfConfig::default()).unwrap();
        let v = s.vectorize("z z z");
        assert_eq!(v.nnz(), 0);
        assert_eq!(v.norm(), 0.0);
    }

    #[test]
    fn training_doc_normalized() {
        let s = TfidfState::fit(&["a b", "a c"], &TfidfConfig::default()).unwrap();
        let v = s.vectorize("a b");
        assert_eq!(v.indices, [s.vocabulary["a"], s.vocabulary["b"]]);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bigrams_and_tokenizer() {
        assert_eq!(tokenize("Chapter-11, U.S. code!"), ["chapter", "11", "u", "s", "code"]);
        let s = TfidfState::fit(&["Under Chapter 11"], &TfidfConfig { ngram_range: (1, 2), min_df: 1 }).unwrap();
        assert!(s.vocabulary.contains_key("chapter 11"));
        assert!(s.vocabulary.contains_key("under"));
        assert_eq!(s.len(), 5);
        let cols: Vec<usize> = s.vocabulary.values().copied().collect();
        assert_eq!(cols, [0, 1, 2, 3, 4]);
    }

    #[test]
    fn min_df_prunes_and_bad_range_errors() {
        let s = TfidfState::fit(&["a b", "a c"], &TfidfConfig { ngram_range: (1, 1), min_df: 2 }).unwrap();
        assert_eq!(s.len(), 1);
        assert!(TfidfState::fit(&["a"], &TfidfConfig { ngram_range: (2, 1), min_df: 1 }).is_err());
        assert!(TfidfState::fit::<&str>(&[], &TfidfConfig::default()).is_err());
    }
}
