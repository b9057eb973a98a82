//! Mean-rank fusion of the synset list S and the classifier list R, and the
//! inversion of per-topic fused lists into per-article tag sets.
//!
//! For an article A with 1-based ranks `s_A` in S and `r_A` in R:
//!
//! ```text
//! in both lists:  t_A = (s_A + r_A) / 2
//! only in R:      t_A = r_A · |S|
//! only in S:      t_A = s_A · |S|
//! ```
//!
//! Articles are re-ranked by `t_A` ascending and the list is cut at
//! `|F| = a · |S|`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::write_jsonl;
use crate::error::{Error, Result};
use crate::ranked::{Origin, RankedEntry, RankedList};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Fused list size as a multiple of the synset list size.
    pub a: u32,
    /// Optional cut on the normalized tag score, applied during inversion.
    pub score_threshold: Option<f64>,
}

impl FusionConfig {
    pub fn new(a: u32) -> Result<Self> {
        if a == 0 {
            return Err(Error::Config("fusion multiplier a must be at least 1".into()));
        }
        Ok(Self {
            a,
            score_threshold: None,
        })
    }

    /// `|F| = a · |S|`
    pub fn list_size(&self, synset_len: usize) -> usize {
        self.a as usize * synset_len
    }
}

fn check_inputs(s: &RankedList, r: &RankedList) -> Result<()> {
    if s.origin() != Origin::Synset {
        return Err(Error::invalid(format!(
            "first fusion input has origin {}, expected synset",
            s.origin()
        )));
    }
    if r.origin() != Origin::Classifier {
        return Err(Error::invalid(format!(
            "second fusion input has origin {}, expected classifier",
            r.origin()
        )));
    }
    if s.topic() != r.topic() {
        return Err(Error::invalid(format!(
            "cannot fuse lists of different topics ({:?} and {:?})",
            s.topic(),
            r.topic()
        )));
    }
    Ok(())
}

/// Every article of `S ∪ R` with its mean-rank score, before truncation.
pub fn fuse_all(s: &RankedList, r: &RankedList) -> Result<RankedList> {
    check_inputs(s, r)?;
    let size_s = s.len() as f64;
    let r_rank: HashMap<&str, usize> = r.ranked().map(|(k, e)| (e.article_id.as_str(), k)).collect();
    let mut entries = Vec::with_capacity(s.len() + r.len());
    let mut in_s = std::collections::HashSet::with_capacity(s.len());
    for (sr, e) in s.ranked() {
        in_s.insert(e.article_id.as_str());
        let score = match r_rank.get(e.article_id.as_str()) {
            Some(&rr) => (sr as f64 + rr as f64) / 2.0,
            None => sr as f64 * size_s,
        };
        entries.push(RankedEntry {
            article_id: e.article_id.clone(),
            score,
        });
    }
    for (rr, e) in r.ranked() {
        if !in_s.contains(e.article_id.as_str()) {
            entries.push(RankedEntry {
                article_id: e.article_id.clone(),
                score: rr as f64 * size_s,
            });
        }
    }
    RankedList::new(s.topic(), Origin::Fusion, entries)
}

/// Fused list truncated to `a · |S|`. An empty S yields an empty list.
pub fn fuse(s: &RankedList, r: &RankedList, config: &FusionConfig) -> Result<RankedList> {
    check_inputs(s, r)?;
    if config.a == 0 {
        return Err(Error::Config("fusion multiplier a must be at least 1".into()));
    }
    if s.is_empty() {
        log::warn!("{}: synset list is empty, topic cannot be fused", s.topic());
        return Ok(RankedList::empty(s.topic(), Origin::Fusion));
    }
    let mut all = fuse_all(s, r)?;
    all.truncate(config.list_size(s.len()));
    Ok(all)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tag {
    pub topic: String,
    pub score: f64,
}

/// Predicted topics of one article, ordered by topic name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagAssignment {
    pub id: String,
    pub tags: Vec<Tag>,
}

impl TagAssignment {
    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.tags.iter().map(|t| t.topic.as_str())
    }
}

/// Normalized rank score `1 − (rank − 1) / |F|`.
pub fn rank_score(rank: usize, list_len: usize) -> f64 {
    1.0 - (rank as f64 - 1.0) / list_len as f64
}

/// Inverts fusion lists into per-article tag sets, ordered by article id.
pub fn invert(fusion_lists: &BTreeMap<String, RankedList>, score_threshold: Option<f64>) -> Result<Vec<TagAssignment>> {
    invert_lists(fusion_lists, Origin::Fusion, score_threshold)
}

/// Same inversion for lists of any single origin (used to tag with the
/// synset baseline alone).
pub fn invert_lists(
    lists: &BTreeMap<String, RankedList>,
    origin: Origin,
    score_threshold: Option<f64>,
) -> Result<Vec<TagAssignment>> {
    let mut by_article: BTreeMap<&str, Vec<Tag>> = BTreeMap::new();
    for (topic, list) in lists {
        if list.origin() != origin {
            return Err(Error::invalid(format!(
                "list for {topic:?} has origin {}, expected {origin}",
                list.origin()
            )));
        }
        for (rank, e) in list.ranked() {
            let score = rank_score(rank, list.len());
            if score_threshold.is_some_and(|th| score < th) {
                continue;
            }
            by_article.entry(e.article_id.as_str()).or_default().push(Tag {
                topic: topic.clone(),
                score,
            });
        }
    }
    Ok(by_article
        .into_iter()
        .map(|(id, tags)| TagAssignment {
            id: id.to_owned(),
            tags,
        })
        .collect())
}

pub fn save_assignments(path: &Path, assignments: &[TagAssignment]) -> Result<()> {
    write_jsonl(path, assignments)
}

pub fn load_assignments(path: &Path) -> Result<Vec<TagAssignment>> {
    use std::io::BufRead;
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
