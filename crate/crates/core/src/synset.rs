//! Query expansion with synonym sets.
//!
//! Synset files are JSON objects mapping a topic name to its synonym terms:
//!
//! ```json
//! {"Mycology": ["Mycology", "fungology", "History of mycology", "Study of fungi"]}
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{ABSTRACT, TITLE};
use crate::error::{Error, Result};
use crate::index::Index;
use crate::ranked::{Origin, RankedEntry, RankedList};
use crate::tokenize::word_vec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synset {
    pub topic: String,
    pub terms: Vec<String>,
}

impl Synset {
    /// Puts the topic name first, drops token-less terms and removes
    /// case-insensitive duplicates (first spelling wins).
    pub fn new(topic: impl Into<String>, terms: impl IntoIterator<Item = String>) -> Result<Self> {
        let topic = topic.into();
        let mut seen = HashSet::new();
        let terms: Vec<String> = std::iter::once(topic.clone())
            .chain(terms)
            .map(|t| t.trim().to_owned())
            .filter(|t| !word_vec(t).is_empty())
            .filter(|t| seen.insert(t.to_lowercase()))
            .collect();
        if terms.is_empty() {
            return Err(Error::invalid(format!("synset for {topic:?} has no usable terms")));
        }
        Ok(Self { topic, terms })
    }
}

/// Default searched fields: the same text the classifier's positives come from.
pub fn default_fields() -> Vec<String> {
    vec![TITLE.to_string(), ABSTRACT.to_string()]
}

/// Reads the synset file and returns one synset per requested topic.
/// Topic keys are matched case-insensitively; missing topics are an error.
pub fn load_synsets(path: &Path, topics: &[String]) -> Result<BTreeMap<String, Synset>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_owned(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let mut by_lower: BTreeMap<String, &Vec<String>> = BTreeMap::new();
    for (k, v) in &raw {
        if by_lower.insert(k.to_lowercase(), v).is_some() {
            return Err(Error::invalid(format!("synset file lists topic {k:?} twice")));
        }
    }
    let missing: Vec<String> = topics
        .iter()
        .filter(|t| !by_lower.contains_key(&t.to_lowercase()))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingSynsets(missing));
    }
    topics
        .iter()
        .map(|t| {
            let terms = by_lower[&t.to_lowercase()];
            if terms.is_empty() {
                return Err(Error::invalid(format!("synset for {t:?} is empty")));
            }
            Ok((t.clone(), Synset::new(t.clone(), terms.iter().cloned())?))
        })
        .collect()
}

pub fn save_synsets(path: &Path, synsets: &BTreeMap<String, Synset>) -> Result<()> {
    let raw: BTreeMap<&str, &Vec<String>> = synsets.iter().map(|(k, s)| (k.as_str(), &s.terms)).collect();
    let text = serde_json::to_string_pretty(&raw).map_err(|e| Error::io(path, e.into()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Ranks articles matching any synset term; the score is the summed BM25
/// phrase score over `fields`.
pub fn synset_rank(synset: &Synset, index: &Index, fields: &[String], limit: usize) -> Result<RankedList> {
    let hits = index.search_any(&synset.terms, fields, limit)?;
    let entries = hits
        .into_iter()
        .map(|h| RankedEntry {
            article_id: h.article_id,
            score: h.score,
        })
        .collect();
    RankedList::new(synset.topic.clone(), Origin::Synset, entries)
}
