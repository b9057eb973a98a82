use std::collections::{BTreeMap, HashMap, HashSet};

use sha2::{Digest, Sha256};

use super::sparse::CsrMatrix;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tokenize::word_vec;

/// Unigrams and space-joined bigrams of a text, in order of occurrence.
pub fn ngrams(text: &str) -> Vec<String> {
    let words = word_vec(text);
    let mut out = Vec::with_capacity(words.len() * 2);
    out.extend(words.iter().cloned());
    out.extend(words.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    out
}

/// Uni/bi-gram vocabulary with lexicographic column ordinals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    ordinal: HashMap<String, u32>,
    document_frequency: Vec<usize>,
    num_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn ordinal(&self, term: &str) -> Option<usize> {
        self.ordinal.get(term).map(|&o| o as usize)
    }

    pub fn document_frequency(&self, ordinal: usize) -> usize {
        self.document_frequency[ordinal]
    }

    /// Number of documents the vocabulary was fitted on.
    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    /// `ln((1 + M) / (1 + df)) + 1`
    pub fn idf(&self, ordinal: usize) -> f64 {
        let m = self.num_docs as f64;
        ((1.0 + m) / (1.0 + self.document_frequency[ordinal] as f64)).ln() + 1.0
    }

    /// SHA-256 over terms and document frequencies; identifies the feature space.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update((self.num_docs as u64).to_le_bytes());
        for (t, df) in self.terms.iter().zip(&self.document_frequency) {
            h.update(t.as_bytes());
            h.update([0]);
            h.update((*df as u64).to_le_bytes());
        }
        h.finalize().into()
    }
}

/// Fits the uni/bi-gram vocabulary over every article's title + abstract.
/// Keeps terms with `min_df <= df <= max_df_fraction * M`.
pub fn fit_vocabulary(corpus: &Corpus, min_df: usize, max_df_fraction: f64) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::invalid("cannot fit a vocabulary on an empty corpus"));
    }
    if !(0.0..=1.0).contains(&max_df_fraction) {
        return Err(Error::Config(format!(
            "max_df_fraction must lie in [0, 1], got {max_df_fraction}"
        )));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for rec in corpus.iter() {
        let unique: HashSet<String> = ngrams(&rec.text_repr()).into_iter().collect();
        for g in unique {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let m = corpus.len();
    let max_df = max_df_fraction * m as f64;
    let (terms, document_frequency): (Vec<String>, Vec<usize>) = df
        .into_iter()
        .filter(|&(_, d)| d >= min_df && d as f64 <= max_df)
        .unzip();
    if terms.is_empty() {
        return Err(Error::invalid(format!(
            "vocabulary is empty after document-frequency filtering (min_df={min_df}, max_df_fraction={max_df_fraction})"
        )));
    }
    let ordinal = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
    Ok(Vocabulary {
        terms,
        ordinal,
        document_frequency,
        num_docs: m,
    })
}

/// Row-normalized TF-IDF matrix; row `i` is corpus ordinal `i`.
#[derive(Debug, Clone)]
pub struct TfIdfMatrix<T> {
    pub matrix: CsrMatrix<T>,
    /// Rows that contain no vocabulary term and are therefore all zero.
    pub empty_rows: Vec<usize>,
}

/// Raw term counts times the vocabulary idf, then L2 normalization per row.
/// Out-of-vocabulary n-grams are ignored; a corpus other than the fitting
/// corpus is weighted with the fitted document frequencies.
pub fn vectorize<T: Scalar>(corpus: &Corpus, vocab: &Vocabulary) -> TfIdfMatrix<T> {
    let mut rows = Vec::with_capacity(corpus.len());
    let mut empty_rows = Vec::new();
    for (i, rec) in corpus.iter().enumerate() {
        let mut tf: BTreeMap<u32, u32> = BTreeMap::new();
        for g in ngrams(&rec.text_repr()) {
            if let Some(&o) = vocab.ordinal.get(&g) {
                *tf.entry(o).or_insert(0) += 1;
            }
        }
        let weights: Vec<(u32, f64)> = tf
            .into_iter()
            .map(|(o, c)| (o, c as f64 * vocab.idf(o as usize)))
            .collect();
        let norm = weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm == 0.0 {
            empty_rows.push(i);
        }
        rows.push(weights.into_iter().map(|(o, w)| (o, T::of(w / norm))).collect());
    }
    TfIdfMatrix {
        matrix: CsrMatrix::from_rows(vocab.len(), rows),
        empty_rows,
    }
}
