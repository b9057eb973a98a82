//! Article metadata ingestion and the ground-truth label table.
//!
//! Corpus files are UTF-8 JSON Lines, one article per line:
//!
//! ```text
//! {"id": "A1", "title": "...", "abstract": "...", "keywords": ["..."], "subjects": ["..."], "categories:wos": ["..."]}
//! ```
//!
//! `keywords` and `subjects` may be omitted or empty. Any other key holding an
//! array of strings is kept as an extra category field. Ground-truth files are
//! JSON Lines of `{"id": "...", "topics": ["..."]}`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::tokenize::{contains_phrase, word_vec};

pub const TITLE: &str = "title";
pub const ABSTRACT: &str = "abstract";
pub const KEYWORDS: &str = "keywords";
pub const SUBJECTS: &str = "subjects";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub subjects: Vec<String>,
    #[serde(flatten)]
    pub extra_category_fields: BTreeMap<String, Vec<String>>,
}

impl ArticleRecord {
    /// Title and abstract joined by one space: the text every model sees.
    pub fn text_repr(&self) -> String {
        let mut s = String::with_capacity(self.title.len() + self.abstract_text.len() + 1);
        s.push_str(&self.title);
        s.push(' ');
        s.push_str(&self.abstract_text);
        s
    }

    /// Texts stored under a field name, or `None` if the record has no such field.
    pub fn field(&self, name: &str) -> Option<Vec<&str>> {
        match name {
            TITLE => Some(vec![self.title.as_str()]),
            ABSTRACT => Some(vec![self.abstract_text.as_str()]),
            KEYWORDS => Some(self.keywords.iter().map(String::as_str).collect()),
            SUBJECTS => Some(self.subjects.iter().map(String::as_str).collect()),
            other => self
                .extra_category_fields
                .get(other)
                .map(|v| v.iter().map(String::as_str).collect()),
        }
    }

    /// Names of every text field present on this record.
    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        [TITLE, ABSTRACT, KEYWORDS, SUBJECTS]
            .into_iter()
            .chain(self.extra_category_fields.keys().map(String::as_str))
    }
}

/// Free-function form of [`ArticleRecord::text_repr`].
pub fn text_repr(article: &ArticleRecord) -> String {
    article.text_repr()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRecord {
    pub line: usize,
    pub id: Option<String>,
    pub reason: String,
}

/// Immutable, ordinal-addressed article collection.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<ArticleRecord>,
    index_of: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids and records without title or abstract.
    pub fn from_records(records: Vec<ArticleRecord>) -> Result<Self> {
        let mut index_of = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.id.is_empty() {
                return Err(Error::invalid(format!("record {i} has an empty id")));
            }
            if r.title.trim().is_empty() || r.abstract_text.trim().is_empty() {
                return Err(Error::invalid(format!(
                    "record {:?} is missing its title or abstract",
                    r.id
                )));
            }
            if index_of.insert(r.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        Ok(Self { records, index_of })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ArticleRecord] {
        &self.records
    }

    pub fn get(&self, ordinal: usize) -> Option<&ArticleRecord> {
        self.records.get(ordinal)
    }

    pub fn ordinal(&self, id: &str) -> Option<usize> {
        self.index_of.get(id).copied()
    }

    pub fn by_id(&self, id: &str) -> Option<&ArticleRecord> {
        self.ordinal(id).map(|i| &self.records[i])
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ArticleRecord> {
        self.records.iter()
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        write_jsonl(path, &self.records)
    }
}

/// Outcome of reading a corpus file.
#[derive(Debug)]
pub struct Ingested {
    pub corpus: Corpus,
    pub skipped: Vec<SkippedRecord>,
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    title: Option<String>,
    #[serde(rename = "abstract")]
    abstract_text: Option<String>,
    #[serde(flatten)]
    rest: BTreeMap<String, Value>,
}

fn string_list(v: &Value) -> Option<Vec<String>> {
    v.as_array()?.iter().map(|e| e.as_str().map(str::to_owned)).collect()
}

/// Reads a JSON Lines corpus file.
///
/// Blank lines are ignored. Records with no usable title or abstract are
/// skipped and reported; a duplicate id aborts ingestion.
pub fn ingest_corpus(path: &Path) -> Result<Ingested> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut skipped = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: lineno,
            message: e.to_string(),
        })?;
        let id = match raw.id {
            Some(id) if !id.is_empty() => id,
            _ => {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line: lineno,
                    message: "missing or empty `id`".into(),
                })
            }
        };
        let title = raw.title.unwrap_or_default();
        let abstract_text = raw.abstract_text.unwrap_or_default();
        if title.trim().is_empty() || abstract_text.trim().is_empty() {
            let which = if title.trim().is_empty() { TITLE } else { ABSTRACT };
            log::warn!("{}:{lineno}: skipping {id:?}: missing {which}", path.display());
            skipped.push(SkippedRecord {
                line: lineno,
                id: Some(id),
                reason: format!("missing {which}"),
            });
            continue;
        }
        if let Some(first) = seen.insert(id.clone(), lineno) {
            log::error!("{}: id {id:?} on lines {first} and {lineno}", path.display());
            return Err(Error::DuplicateId(id));
        }

        let mut keywords = Vec::new();
        let mut subjects = Vec::new();
        let mut extra = BTreeMap::new();
        for (key, value) in &raw.rest {
            let list = string_list(value);
            match (key.as_str(), list) {
                (KEYWORDS, Some(l)) => keywords = l,
                (SUBJECTS, Some(l)) => subjects = l,
                (KEYWORDS | SUBJECTS, None) if !value.is_null() => {
                    return Err(Error::Parse {
                        path: path.to_owned(),
                        line: lineno,
                        message: format!("`{key}` must be an array of strings"),
                    })
                }
                (_, Some(l)) => {
                    extra.insert(key.clone(), l);
                }
                // Scalars and objects under other keys are not category data.
                _ => {}
            }
        }
        records.push(ArticleRecord {
            id,
            title,
            abstract_text,
            keywords,
            subjects,
            extra_category_fields: extra,
        });
    }

    let corpus = Corpus::from_records(records)?;
    Ok(Ingested { corpus, skipped })
}

/// Article id → non-empty set of topic names.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub labels: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Serialize, Deserialize)]
struct TruthLine {
    id: String,
    topics: Vec<String>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&BTreeSet<String>> {
        self.labels.get(id)
    }

    pub fn insert(&mut self, id: impl Into<String>, topic: impl Into<String>) {
        self.labels.entry(id.into()).or_default().insert(topic.into());
    }

    /// Keeps only topics from `topics` (matched case-insensitively and renamed to
    /// the canonical spelling); articles left without labels are dropped.
    pub fn restrict_to(&self, topics: &[String]) -> GroundTruth {
        let canon: HashMap<String, &String> = topics.iter().map(|t| (t.to_lowercase(), t)).collect();
        let labels = self
            .labels
            .iter()
            .filter_map(|(id, set)| {
                let kept: BTreeSet<String> = set
                    .iter()
                    .filter_map(|t| canon.get(&t.to_lowercase()).map(|c| (*c).clone()))
                    .collect();
                (!kept.is_empty()).then(|| (id.clone(), kept))
            })
            .collect();
        GroundTruth { labels }
    }

    /// Ids in `self` that the corpus does not contain.
    pub fn unknown_ids<'a>(&'a self, corpus: &Corpus) -> Vec<&'a str> {
        self.labels
            .keys()
            .filter(|id| corpus.ordinal(id).is_none())
            .map(String::as_str)
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut gt = GroundTruth::default();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TruthLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message: e.to_string(),
            })?;
            if rec.topics.is_empty() {
                continue;
            }
            if gt.labels.contains_key(&rec.id) {
                return Err(Error::DuplicateId(rec.id));
            }
            gt.labels.insert(rec.id, rec.topics.into_iter().collect());
        }
        Ok(gt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let lines: Vec<TruthLine> = self
            .labels
            .iter()
            .map(|(id, t)| TruthLine {
                id: id.clone(),
                topics: t.iter().cloned().collect(),
            })
            .collect();
        write_jsonl(path, &lines)
    }
}

/// Labels every article whose selected fields contain a topic name as a
/// whole-token phrase (case-insensitive). Articles matching nothing are omitted.
pub fn build_ground_truth(corpus: &Corpus, topic_list: &[String], fields: &[String]) -> Result<GroundTruth> {
    if topic_list.is_empty() {
        return Err(Error::invalid("ground truth needs at least one topic"));
    }
    for f in fields {
        if f == TITLE || f == ABSTRACT {
            return Err(Error::invalid(format!(
                "ground-truth field {f:?} must be a keyword, subject or category field"
            )));
        }
    }
    let topics: Vec<(&String, Vec<String>)> = topic_list
        .iter()
        .map(|t| (t, word_vec(t)))
        .filter(|(_, w)| !w.is_empty())
        .collect();

    let mut gt = GroundTruth::default();
    for rec in corpus.iter() {
        let entries: Vec<Vec<String>> = fields
            .iter()
            .filter_map(|f| rec.field(f))
            .flatten()
            .map(word_vec)
            .collect();
        for (name, words) in &topics {
            if entries.iter().any(|e| contains_phrase(e, words)) {
                gt.insert(rec.id.clone(), (*name).clone());
            }
        }
    }
    Ok(gt)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    crate::error::ensure_parent(path)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    pub(crate) fn rec(id: &str, title: &str, abs: &str) -> ArticleRecord {
        ArticleRecord {
            id: id.into(),
            title: title.into(),
            abstract_text: abs.into(),
            keywords: vec![],
            subjects: vec![],
            extra_category_fields: BTreeMap::new(),
        }
    }

    #[test]
    fn ingests_valid_lines() {
        let f = tmp_file(concat!(
            r#"{"id":"a","title":"T1","abstract":"A1","keywords":["k"],"subjects":[]}"#,
            "\n",
            r#"{"id":"b","title":"T2","abstract":"A2"}"#,
            "\n\n",
            r#"{"id":"c","title":"T3","abstract":"A3","categories:wos":["Mycology"],"year":2001}"#,
            "\n"
        ));
        let got = ingest_corpus(f.path()).unwrap();
        assert_eq!(got.corpus.len(), 3);
        assert!(got.skipped.is_empty());
        assert_eq!(got.corpus.ordinal("c"), Some(2));
        let c = got.corpus.by_id("c").unwrap();
        assert_eq!(c.field("categories:wos"), Some(vec!["Mycology"]));
        assert!(c.field("year").is_none());
    }

    #[test]
    fn missing_abstract_is_skipped_with_warning() {
        let f = tmp_file(concat!(
            r#"{"id":"a","title":"T","abstract":"A"}"#,
            "\n",
            r#"{"id":"b","title":"T"}"#,
            "\n",
            r#"{"id":"c","title":"T","abstract":"A"}"#,
            "\n"
        ));
        let got = ingest_corpus(f.path()).unwrap();
        assert_eq!(got.corpus.len(), 2);
        assert_eq!(got.skipped.len(), 1);
        assert_eq!(got.skipped[0].line, 2);
        assert_eq!(got.skipped[0].id.as_deref(), Some("b"));
    }

    #[test]
    fn duplicate_id_is_fatal_and_named() {
        let mut body = String::new();
        for id in ["X", "b", "c", "d", "X"] {
            body.push_str(&format!(r#"{{"id":"{id}","title":"t","abstract":"a"}}"#));
            body.push('\n');
        }
        let err = ingest_corpus(tmp_file(&body).path()).unwrap_err();
        assert!(matches!(&err, Error::DuplicateId(id) if id == "X"));
        assert!(err.to_string().contains("\"X\""));
    }

    #[test]
    fn unreadable_file_is_fatal() {
        let err = ingest_corpus(Path::new("/nonexistent/corpus.jsonl")).unwrap_err();
        assert_eq!(err.category(), "io");
    }

    #[test]
    fn ingestion_is_pure_in_file_bytes() {
        let body = (0..20)
            .map(|i| format!(r#"{{"id":"d{}","title":"t","abstract":"a"}}"#, (i * 7) % 20))
            .collect::<Vec<_>>()
            .join("\n");
        let f = tmp_file(&body);
        let a = ingest_corpus(f.path()).unwrap().corpus;
        let b = ingest_corpus(f.path()).unwrap().corpus;
        assert_eq!(a.records(), b.records());
        for r in a.iter() {
            assert_eq!(a.ordinal(&r.id), b.ordinal(&r.id));
        }
    }

    #[test]
    fn text_repr_joins_with_single_space() {
        let r = rec("x", "A", "B");
        assert_eq!(text_repr(&r), "A B");
        assert_eq!(r.text_repr(), r.clone().text_repr());
    }

    #[test]
    fn ground_truth_whole_phrase_rule() {
        let topics: Vec<String> = ["Mycology", "Artificial Intelligence"].map(String::from).to_vec();
        let mut a = rec("a", "t", "x");
        a.subjects = vec!["Mycology".into()];
        let mut b = rec("b", "t", "x");
        b.keywords = vec!["mycological methods".into()];
        let mut c = rec("c", "t", "x");
        c.keywords = vec!["History of MYCOLOGY".into(), "artificial-intelligence".into()];
        let mut d = rec("d", "t", "x");
        d.keywords = vec!["artificial general intelligence".into()];
        let mut e = rec("e", "t", "x");
        e.extra_category_fields
            .insert("categories:wos".into(), vec!["Mycology".into()]);
        let corpus = Corpus::from_records(vec![a, b, c, d, e]).unwrap();
        let fields = vec![KEYWORDS.to_string(), SUBJECTS.to_string()];
        let gt = build_ground_truth(&corpus, &topics, &fields).unwrap();

        // Hand-built oracle for the token-boundary phrase rule.
        let mut expected = GroundTruth::default();
        expected.insert("a", "Mycology");
        expected.insert("c", "Mycology");
        expected.insert("c", "Artificial Intelligence");
        assert_eq!(gt, expected);

        let mut with_extra = fields.clone();
        with_extra.push("categories:wos".into());
        let gt = build_ground_truth(&corpus, &topics, &with_extra).unwrap();
        assert!(gt.get("e").unwrap().contains("Mycology"));
        assert!(gt.len() <= corpus.len());
        assert!(gt.unknown_ids(&corpus).is_empty());
    }

    #[test]
    fn ground_truth_needs_topics() {
        let corpus = Corpus::from_records(vec![rec("a", "t", "x")]).unwrap();
        assert!(build_ground_truth(&corpus, &[], &[SUBJECTS.into()]).is_err());
    }

    #[test]
    fn ground_truth_file_round_trip_and_restrict() {
        let mut gt = GroundTruth::default();
        gt.insert("a", "Mycology");
        gt.insert("b", "mycology");
        gt.insert("b", "Other");
        gt.insert("c", "Other");
        let f = tempfile::NamedTempFile::new().unwrap();
        gt.save(f.path()).unwrap();
        assert_eq!(GroundTruth::load(f.path()).unwrap(), gt);

        let r = gt.restrict_to(&["Mycology".into()]);
        assert_eq!(r.len(), 2);
        assert_eq!(r.get("b").unwrap().iter().collect::<Vec<_>>(), ["Mycology"]);
    }
}
