//! Positional inverted index with BM25 phrase scoring.
//!
//! A phrase is scored as one pseudo-term: its frequency is the number of
//! positions where all of its tokens occur consecutively, and its document
//! frequency is the number of documents where that happens in the field.
//!
//! ```text
//! idf(p, f)      = ln(1 + (N - df + 0.5) / (df + 0.5))
//! score(D, p, f) = idf * pf * (k1 + 1) / (pf + k1 * (1 - b + b * |D_f| / avgdl_f))
//! ```
//!
//! Scores are computed per field and summed over the queried fields.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, ABSTRACT, KEYWORDS, SUBJECTS, TITLE};
use crate::error::{Error, Result};
use crate::tokenize::{tokens, word_vec};

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub field: u16,
    pub positions: Vec<u32>,
}

impl Posting {
    pub fn term_frequency(&self) -> usize {
        self.positions.len()
    }
}

/// All occurrences of one term, sorted by `(doc, field)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostingList {
    pub term: String,
    pub postings: Vec<Posting>,
}

impl PostingList {
    fn find(&self, doc: u32, field: u16) -> Option<&Posting> {
        self.postings
            .binary_search_by(|p| (p.doc, p.field).cmp(&(doc, field)))
            .ok()
            .map(|i| &self.postings[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FieldStats {
    lengths: Vec<u32>,
    avg_len: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchHit {
    pub article_id: String,
    pub score: f64,
}

/// Every text field name that occurs in the corpus, standard fields first.
pub fn all_text_fields(corpus: &Corpus) -> Vec<String> {
    let mut fields: Vec<String> = [TITLE, ABSTRACT, KEYWORDS, SUBJECTS].map(String::from).to_vec();
    let mut extra: Vec<&str> = corpus
        .iter()
        .flat_map(|r| r.extra_category_fields.keys().map(String::as_str))
        .collect();
    extra.sort_unstable();
    extra.dedup();
    fields.extend(extra.into_iter().map(String::from));
    fields
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Index {
    version: u32,
    fields: Vec<String>,
    doc_ids: Vec<String>,
    stats: Vec<FieldStats>,
    terms: BTreeMap<String, PostingList>,
}

impl Index {
    /// Indexes every token of the selected fields. List-valued fields are
    /// concatenated with a one-position gap so phrases never span two entries.
    pub fn build(corpus: &Corpus, fields: &[String]) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::invalid("index needs at least one field"));
        }
        if fields.len() > u16::MAX as usize {
            return Err(Error::invalid("too many fields"));
        }
        let mut terms: BTreeMap<String, PostingList> = BTreeMap::new();
        let mut stats: Vec<FieldStats> = fields
            .iter()
            .map(|_| FieldStats {
                lengths: Vec::with_capacity(corpus.len()),
                avg_len: 0.0,
            })
            .collect();

        for (doc, rec) in corpus.iter().enumerate() {
            for (fi, name) in fields.iter().enumerate() {
                let mut per_term: BTreeMap<String, Vec<u32>> = BTreeMap::new();
                let mut offset = 0u32;
                let mut length = 0u32;
                for text in rec.field(name).unwrap_or_default() {
                    let mut n = 0;
                    for tok in tokens(text) {
                        per_term.entry(tok.surface).or_default().push(offset + tok.position);
                        n += 1;
                    }
                    length += n;
                    offset += n + 1;
                }
                stats[fi].lengths.push(length);
                for (term, positions) in per_term {
                    terms
                        .entry(term.clone())
                        .or_insert_with(|| PostingList {
                            term,
                            postings: Vec::new(),
                        })
                        .postings
                        .push(Posting {
                            doc: doc as u32,
                            field: fi as u16,
                            positions,
                        });
                }
            }
        }
        for s in &mut stats {
            let total: u64 = s.lengths.iter().map(|&l| l as u64).sum();
            s.avg_len = if s.lengths.is_empty() {
                0.0
            } else {
                total as f64 / s.lengths.len() as f64
            };
        }
        Ok(Self {
            version: FORMAT_VERSION,
            fields: fields.to_vec(),
            doc_ids: corpus.iter().map(|r| r.id.clone()).collect(),
            stats,
            terms,
        })
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn fields(&self) -> &[String] {
        &self.fields
    }

    pub fn doc_id(&self, ordinal: usize) -> &str {
        &self.doc_ids[ordinal]
    }

    pub fn postings(&self, term: &str) -> Option<&PostingList> {
        self.terms.get(term)
    }

    fn field_ordinals(&self, fields: &[String]) -> Result<Vec<u16>> {
        fields
            .iter()
            .map(|f| {
                self.fields
                    .iter()
                    .position(|g| g == f)
                    .map(|i| i as u16)
                    .ok_or_else(|| Error::invalid(format!("field {f:?} is not indexed")))
            })
            .collect()
    }

    /// Phrase frequency per `(doc, field)` for the given token sequence.
    fn phrase_matches(&self, words: &[String], fields: &[u16]) -> Vec<(u32, u16, u32)> {
        let lists: Option<Vec<&PostingList>> = words.iter().map(|w| self.terms.get(w)).collect();
        let Some(lists) = lists else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for head in &lists[0].postings {
            if !fields.contains(&head.field) {
                continue;
            }
            let rest: Option<Vec<&Posting>> = lists[1..].iter().map(|l| l.find(head.doc, head.field)).collect();
            let Some(rest) = rest else { continue };
            let pf = head
                .positions
                .iter()
                .filter(|&&p| {
                    rest.iter()
                        .enumerate()
                        .all(|(i, post)| post.positions.binary_search(&(p + i as u32 + 1)).is_ok())
                })
                .count() as u32;
            if pf > 0 {
                out.push((head.doc, head.field, pf));
            }
        }
        out
    }

    /// BM25 phrase score per document ordinal, summed over `fields`.
    fn phrase_scores(&self, words: &[String], fields: &[u16]) -> BTreeMap<u32, f64> {
        let matches = self.phrase_matches(words, fields);
        let mut df = vec![0usize; self.fields.len()];
        for &(_, f, _) in &matches {
            df[f as usize] += 1;
        }
        let n = self.num_docs() as f64;
        let mut scores = BTreeMap::new();
        for (doc, f, pf) in matches {
            let st = &self.stats[f as usize];
            let d = df[f as usize] as f64;
            let idf = (1.0 + (n - d + 0.5) / (d + 0.5)).ln();
            let len = st.lengths[doc as usize] as f64;
            let norm = if st.avg_len > 0.0 { len / st.avg_len } else { 0.0 };
            let pf = pf as f64;
            let s = idf * pf * (BM25_K1 + 1.0) / (pf + BM25_K1 * (1.0 - BM25_B + BM25_B * norm));
            *scores.entry(doc).or_insert(0.0) += s;
        }
        scores
    }

    fn ranked(&self, scores: BTreeMap<u32, f64>, limit: usize) -> Vec<SearchHit> {
        let mut hits: Vec<SearchHit> = scores
            .into_iter()
            .map(|(doc, score)| SearchHit {
                article_id: self.doc_ids[doc as usize].clone(),
                score,
            })
            .collect();
        hits.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.article_id.cmp(&b.article_id))
        });
        hits.truncate(limit);
        hits
    }

    /// Documents containing `phrase` as consecutive tokens in a selected field.
    pub fn search_phrase(&self, phrase: &str, fields: &[String], limit: usize) -> Result<Vec<SearchHit>> {
        let words = word_vec(phrase);
        if words.is_empty() {
            return Err(Error::invalid(format!("phrase {phrase:?} has no tokens")));
        }
        let f = self.field_ordinals(fields)?;
        Ok(self.ranked(self.phrase_scores(&words, &f), limit))
    }

    /// OR query over phrases; a document's score is the sum of its per-phrase scores.
    pub fn search_any<S: AsRef<str>>(&self, terms: &[S], fields: &[String], limit: usize) -> Result<Vec<SearchHit>> {
        let phrases: Vec<Vec<String>> = terms
            .iter()
            .map(|t| word_vec(t.as_ref()))
            .filter(|w| !w.is_empty())
            .collect();
        if phrases.is_empty() {
            return Err(Error::invalid("no query term has any tokens"));
        }
        let f = self.field_ordinals(fields)?;
        let mut total: BTreeMap<u32, f64> = BTreeMap::new();
        for words in &phrases {
            for (doc, s) in self.phrase_scores(words, &f) {
                *total.entry(doc).or_insert(0.0) += s;
            }
        }
        Ok(self.ranked(total, limit))
    }

    /// Per-ordinal flag: does any term occur (as a phrase) in any selected field?
    /// Terms without tokens never match.
    pub fn has_any_match<S: AsRef<str>>(&self, terms: &[S], fields: &[String]) -> Result<Vec<bool>> {
        let f = self.field_ordinals(fields)?;
        let mut flags = vec![false; self.num_docs()];
        for t in terms {
            let words = word_vec(t.as_ref());
            if words.is_empty() {
                continue;
            }
            for (doc, _, _) in self.phrase_matches(&words, &f) {
                flags[doc as usize] = true;
            }
        }
        Ok(flags)
    }

    /// Map of article id → ordinal, for callers that hold only an index.
    pub fn id_map(&self) -> HashMap<&str, usize> {
        self.doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(f), self).map_err(|e| Error::io(path, e.into()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let idx: Index = serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Artifact {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        if idx.version != FORMAT_VERSION {
            return Err(Error::Artifact {
                path: path.to_owned(),
                message: format!("index format version {} (expected {FORMAT_VERSION})", idx.version),
            });
        }
        Ok(idx)
    }
}
