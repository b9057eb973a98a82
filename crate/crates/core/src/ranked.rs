//! Per-topic ranked article lists, the data passed between pipeline stages.
//!
//! On disk a list is a tab-separated file:
//!
//! ```text
//! #topic	Mycology
//! #origin	classifier
//! rank	article_id	score
//! 1	A17	0.93
//! ```
//!
//! Scores are written in shortest round-trip form, so reading a file back
//! yields bit-identical values.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Classifier,
    Synset,
    Fusion,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Classifier => "classifier",
            Origin::Synset => "synset",
            Origin::Fusion => "fusion",
        }
    }

    /// Fusion lists hold mean ranks (lower is better); the others hold relevance.
    pub fn ascending(self) -> bool {
        self == Origin::Fusion
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classifier" => Ok(Origin::Classifier),
            "synset" => Ok(Origin::Synset),
            "fusion" => Ok(Origin::Fusion),
            other => Err(Error::invalid(format!("unknown list origin {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub article_id: String,
    pub score: f64,
}

/// Ordered, duplicate-free article list for one topic. Rank is position + 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    topic: String,
    origin: Origin,
    entries: Vec<RankedEntry>,
}

impl RankedList {
    /// Sorts `entries` into canonical order (score in the origin's direction,
    /// then article id ascending). Duplicate ids and non-finite scores are rejected.
    pub fn new(topic: impl Into<String>, origin: Origin, mut entries: Vec<RankedEntry>) -> Result<Self> {
        let topic = topic.into();
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !e.score.is_finite() {
                return Err(Error::invalid(format!(
                    "{topic}: non-finite score for {:?}",
                    e.article_id
                )));
            }
            if !seen.insert(e.article_id.as_str()) {
                return Err(Error::invalid(format!(
                    "{topic}: article {:?} listed twice",
                    e.article_id
                )));
            }
        }
        entries.sort_by(|a, b| {
            let by_score = if origin.ascending() {
                a.score.total_cmp(&b.score)
            } else {
                b.score.total_cmp(&a.score)
            };
            by_score.then_with(|| a.article_id.cmp(&b.article_id))
        });
        Ok(Self { topic, origin, entries })
    }

    pub fn empty(topic: impl Into<String>, origin: Origin) -> Self {
        Self {
            topic: topic.into(),
            origin,
            entries: Vec::new(),
        }
    }

    pub fn topic(&self) -> &str {
        &self.topic
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(rank, entry)` pairs with 1-based ranks.
    pub fn ranked(&self) -> impl Iterator<Item = (usize, &RankedEntry)> {
        self.entries.iter().enumerate().map(|(i, e)| (i + 1, e))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.article_id.as_str())
    }

    pub fn truncate(&mut self, len: usize) {
        self.entries.truncate(len);
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "#topic\t{}", self.topic)?;
        writeln!(w, "#origin\t{}", self.origin)?;
        writeln!(w, "rank\tarticle_id\tscore")?;
        for (rank, e) in self.ranked() {
            writeln!(w, "{rank}\t{}\t{}", e.article_id, e.score)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::error::ensure_parent(path)?;
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write_tsv(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_tsv(BufReader::new(f), path)
    }

    pub fn read_tsv<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let bad = |line: usize, message: String| Error::Parse {
            path: path.to_owned(),
            line,
            message,
        };
        let mut topic = None;
        let mut origin = None;
        let mut entries = Vec::new();
        let mut saw_header = false;
        for (i, line) in reader.lines().enumerate() {
            let n = i + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#topic\t") {
                topic = Some(rest.to_owned());
            } else if let Some(rest) = line.strip_prefix("#origin\t") {
                origin = Some(rest.parse::<Origin>().map_err(|e| bad(n, e.to_string()))?);
            } else if line == "rank\tarticle_id\tscore" {
                saw_header = true;
            } else {
                let cols: Vec<&str> = line.split('\t').collect();
                let [rank, id, score] = cols[..] else {
                    return Err(bad(n, format!("expected 3 columns, found {}", cols.len())));
                };
                let rank: usize = rank.parse().map_err(|_| bad(n, format!("bad rank {rank:?}")))?;
                if rank != entries.len() + 1 {
                    return Err(bad(n, format!("rank {rank} out of sequence")));
                }
                let score: f64 = score.parse().map_err(|_| bad(n, format!("bad score {score:?}")))?;
                entries.push(RankedEntry {
                    article_id: id.to_owned(),
                    score,
                });
            }
        }
        let topic = topic.ok_or_else(|| bad(0, "missing #topic header".into()))?;
        let origin = origin.ok_or_else(|| bad(0, "missing #origin header".into()))?;
        if !saw_header {
            return Err(bad(0, "missing column header".into()));
        }
        let list = Self::new(topic, origin, entries.clone())?;
        if list.entries != entries {
            return Err(bad(0, "entries are not in canonical order".into()));
        }
        Ok(list)
    }
}
