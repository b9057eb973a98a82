//! Synthetic corpora with planted topics written in two community vocabularies.
//!
//! Every topic owns a primary and an alternate term pool, disjoint from each
//! other and from every other pool. The topic's synset holds its name and part
//! of the primary pool. A fraction of each topic's articles is written with
//! alternate terms only, so the synset cannot reach them; the rest mix both
//! pools, which is what ties the two vocabularies together in the semantic
//! space. Articles also occasionally mention a synset term of another topic,
//! giving the synset search realistic false positives.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::corpus::{ArticleRecord, Corpus, GroundTruth};
use crate::error::{Error, Result};
use crate::synset::{save_synsets, Synset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub n_topics: usize,
    pub docs_per_topic: usize,
    /// Size of each of the two pools (primary and alternate) per topic.
    pub vocab_per_topic: usize,
    /// Share of a topic's articles written only with its alternate pool.
    pub alt_vocab_fraction: f64,
    pub background_vocab_size: usize,
    /// Abstract length in tokens.
    pub doc_length: usize,
    pub title_length: usize,
    /// Probability that a token is a topic term rather than background.
    pub topic_density: f64,
    /// Share of the primary pool that goes into the synset.
    pub synset_fraction: f64,
    /// Probability that a primary-vocabulary article names its topic in the abstract.
    pub name_rate: f64,
    /// Probability that an article mentions a synset term of another topic.
    pub cross_mention_rate: f64,
    pub seed: u64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            n_topics: 10,
            docs_per_topic: 500,
            vocab_per_topic: 40,
            alt_vocab_fraction: 0.5,
            background_vocab_size: 2000,
            doc_length: 60,
            title_length: 8,
            topic_density: 0.25,
            synset_fraction: 0.5,
            name_rate: 0.7,
            cross_mention_rate: 0.3,
            seed: 7,
        }
    }
}

impl BenchmarkSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_topics", self.n_topics),
            ("docs_per_topic", self.docs_per_topic),
            ("vocab_per_topic", self.vocab_per_topic),
            ("background_vocab_size", self.background_vocab_size),
            ("doc_length", self.doc_length),
            ("title_length", self.title_length),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("benchmark {name} must be at least 1")));
            }
        }
        let fractions = [
            ("alt_vocab_fraction", self.alt_vocab_fraction),
            ("topic_density", self.topic_density),
            ("synset_fraction", self.synset_fraction),
            ("name_rate", self.name_rate),
            ("cross_mention_rate", self.cross_mention_rate),
        ];
        for (name, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("benchmark {name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    fn synset_terms_per_topic(&self) -> usize {
        ((self.vocab_per_topic as f64 * self.synset_fraction).round() as usize).clamp(1, self.vocab_per_topic)
    }

    fn alt_docs_per_topic(&self) -> usize {
        (self.docs_per_topic as f64 * self.alt_vocab_fraction).round() as usize
    }
}

#[derive(Debug, Clone)]
pub struct PlantedTopic {
    pub name: String,
    pub primary: Vec<String>,
    pub alternate: Vec<String>,
    /// Ids of articles written only with the alternate pool.
    pub alternate_docs: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub corpus: Corpus,
    pub truth: GroundTruth,
    pub synsets: BTreeMap<String, Synset>,
    pub topics: Vec<PlantedTopic>,
}

impl Benchmark {
    pub fn topic_names(&self) -> Vec<String> {
        self.topics.iter().map(|t| t.name.clone()).collect()
    }

    /// Writes `corpus.jsonl`, `truth.jsonl` and `synsets.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.corpus.write_jsonl(&dir.join("corpus.jsonl"))?;
        self.truth.save(&dir.join("truth.jsonl"))?;
        save_synsets(&dir.join("synsets.json"), &self.synsets)
    }
}

const CONSONANTS: &[u8] = b"bcdfghklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

struct WordMint {
    used: HashSet<String>,
}

impl WordMint {
    fn word(&mut self, rng: &mut ChaCha8Rng, syllables: usize) -> Result<String> {
        for _ in 0..10_000 {
            let mut w = String::with_capacity(syllables * 2);
            for _ in 0..syllables {
                w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
                w.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
            }
            if self.used.insert(w.clone()) {
                return Ok(w);
            }
        }
        Err(Error::invalid("vocabulary pools collide; try a different seed"))
    }

    fn pool(&mut self, rng: &mut ChaCha8Rng, n: usize) -> Result<Vec<String>> {
        (0..n).map(|_| self.word(rng, 3)).collect()
    }
}

fn check_disjoint(pools: &[&[String]]) -> Result<()> {
    let mut all = HashSet::new();
    for pool in pools {
        for w in pool.iter() {
            if !all.insert(w.as_str()) {
                return Err(Error::invalid(format!(
                    "vocabulary pools collide on {w:?}; try a different seed"
                )));
            }
        }
    }
    Ok(())
}

/// Generates the corpus, its exact planted labels and the synsets.
pub fn generate(spec: &BenchmarkSpec) -> Result<Benchmark> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut mint = WordMint { used: HashSet::new() };

    let mut topics = Vec::with_capacity(spec.n_topics);
    for t in 0..spec.n_topics {
        // Alternate between one- and two-word topic names.
        let name = if t % 2 == 0 {
            capitalize(&mint.word(&mut rng, 4)?)
        } else {
            format!("{} {}", capitalize(&mint.word(&mut rng, 4)?), mint.word(&mut rng, 4)?)
        };
        topics.push(PlantedTopic {
            name,
            primary: mint.pool(&mut rng, spec.vocab_per_topic)?,
            alternate: mint.pool(&mut rng, spec.vocab_per_topic)?,
            alternate_docs: Vec::new(),
        });
    }
    let background = mint.pool(&mut rng, spec.background_vocab_size)?;

    let mut pools: Vec<&[String]> = vec![&background];
    for t in &topics {
        pools.push(&t.primary);
        pools.push(&t.alternate);
    }
    check_disjoint(&pools)?;
    let name_words: Vec<String> = topics
        .iter()
        .flat_map(|t| t.name.split(' ').map(str::to_lowercase))
        .collect();
    pools.push(&name_words);
    check_disjoint(&pools)?;

    let n_syn = spec.synset_terms_per_topic();
    let synsets: BTreeMap<String, Synset> = topics
        .iter()
        .map(|t| {
            let s = Synset::new(t.name.clone(), t.primary[..n_syn].iter().cloned())?;
            Ok((t.name.clone(), s))
        })
        .collect::<Result<_>>()?;

    let zipf =
        Zipf::new(background.len() as f64, 1.07).map_err(|e| Error::Config(format!("zipf distribution: {e}")))?;
    let bg = |rng: &mut ChaCha8Rng| -> String {
        let r = zipf.sample(rng) as usize;
        background[r.clamp(1, background.len()) - 1].clone()
    };

    // (topic, alternate-only) for every document, then shuffled into corpus order.
    let n_alt = spec.alt_docs_per_topic();
    let mut plan: Vec<(usize, bool)> = (0..spec.n_topics)
        .flat_map(|t| (0..spec.docs_per_topic).map(move |j| (t, j < n_alt)))
        .collect();
    plan.shuffle(&mut rng);

    let mut records = Vec::with_capacity(plan.len());
    let mut truth = GroundTruth::default();
    for (i, &(t, alt)) in plan.iter().enumerate() {
        let topic = &topics[t];
        let text = |rng: &mut ChaCha8Rng, len: usize| -> Vec<String> {
            (0..len)
                .map(|_| {
                    if rng.random_bool(spec.topic_density) {
                        let pool = if alt || rng.random_bool(0.5) {
                            &topic.alternate
                        } else {
                            &topic.primary
                        };
                        pool[rng.random_range(0..pool.len())].clone()
                    } else {
                        bg(rng)
                    }
                })
                .collect()
        };
        let title = text(&mut rng, spec.title_length);
        let mut body = text(&mut rng, spec.doc_length);
        if !alt {
            // Every primary-vocabulary article is reachable by its own synset.
            let anchor = if rng.random_bool(spec.name_rate) {
                topic.name.to_lowercase()
            } else {
                topic.primary[rng.random_range(0..n_syn)].clone()
            };
            let at = rng.random_range(0..=body.len());
            body.insert(at, anchor);
        }
        if spec.n_topics > 1 && rng.random_bool(spec.cross_mention_rate) {
            let mut other = rng.random_range(0..spec.n_topics - 1);
            if other >= t {
                other += 1;
            }
            let term = topics[other].primary[rng.random_range(0..n_syn)].clone();
            let at = rng.random_range(0..=body.len());
            body.insert(at, term);
        }
        let id = format!("syn{i:06}");
        if alt {
            topics[t].alternate_docs.push(id.clone());
        }
        truth.insert(id.clone(), topics[t].name.clone());
        records.push(ArticleRecord {
            id,
            title: capitalize(&title.join(" ")),
            abstract_text: capitalize(&body.join(" ")) + ".",
            keywords: Vec::new(),
            subjects: vec![topics[t].name.clone()],
            extra_category_fields: BTreeMap::new(),
        });
    }

    Ok(Benchmark {
        corpus: Corpus::from_records(records)?,
        truth,
        synsets,
        topics,
    })
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_ground_truth, SUBJECTS};
    use crate::index::Index;
    use crate::synset::{default_fields, synset_rank};

    fn small(alt: f64) -> BenchmarkSpec {
        BenchmarkSpec {
            n_topics: 4,
            docs_per_topic: 60,
            vocab_per_topic: 12,
            alt_vocab_fraction: alt,
            background_vocab_size: 300,
            doc_length: 30,
            seed: 3,
            ..Default::default()
        }
    }

    /// Fraction of each topic's planted articles that its own synset retrieves.
    fn synset_recall_by_count(b: &Benchmark) -> Vec<f64> {
        let idx = Index::build(&b.corpus, &default_fields()).unwrap();
        b.topics
            .iter()
            .map(|t| {
                let hits: HashSet<String> = synset_rank(&b.synsets[&t.name], &idx, &default_fields(), usize::MAX)
                    .unwrap()
                    .ids()
                    .map(String::from)
                    .collect();
                let members: Vec<&String> = b
                    .truth
                    .labels
                    .iter()
                    .filter(|(_, s)| s.contains(&t.name))
                    .map(|(id, _)| id)
                    .collect();
                members.iter().filter(|id| hits.contains(**id)).count() as f64 / members.len() as f64
            })
            .collect()
    }

    #[test]
    fn no_alternate_docs_means_synset_reaches_everything() {
        let b = generate(&small(0.0)).unwrap();
        assert!(synset_recall_by_count(&b).iter().all(|&r| r == 1.0));
    }

    #[test]
    fn half_alternate_bounds_synset_recall() {
        let b = generate(&small(0.5)).unwrap();
        for r in synset_recall_by_count(&b) {
            assert_eq!(r, 0.5);
        }
        let idx = Index::build(&b.corpus, &default_fields()).unwrap();
        for t in &b.topics {
            assert_eq!(t.alternate_docs.len(), 30);
            let hits: HashSet<String> = synset_rank(&b.synsets[&t.name], &idx, &default_fields(), usize::MAX)
                .unwrap()
                .ids()
                .map(String::from)
                .collect();
            assert!(t.alternate_docs.iter().all(|d| !hits.contains(d)));
        }
    }

    #[test]
    fn planted_truth_is_exact_and_recoverable_from_subjects() {
        let b = generate(&small(0.5)).unwrap();
        assert_eq!(b.truth.len(), b.corpus.len());
        let rebuilt = build_ground_truth(&b.corpus, &b.topic_names(), &[SUBJECTS.into()]).unwrap();
        assert_eq!(rebuilt, b.truth);
        for t in &b.topics {
            let syn = &b.synsets[&t.name];
            assert!(syn.terms.iter().all(|w| !t.alternate.contains(w)));
            assert_eq!(syn.terms[0], t.name);
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate(&small(0.5)).unwrap().write(a.path()).unwrap();
        generate(&small(0.5)).unwrap().write(b.path()).unwrap();
        for f in ["corpus.jsonl", "truth.jsonl", "synsets.json"] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap()
            );
        }
        let mut other = small(0.5);
        other.seed = 4;
        let c = generate(&other).unwrap();
        assert_ne!(
            c.corpus.records()[0],
            generate(&small(0.5)).unwrap().corpus.records()[0]
        );
    }

    #[test]
    fn rejects_bad_spec() {
        let mut s = small(1.5);
        assert!(generate(&s).is_err());
        s.alt_vocab_fraction = 0.5;
        s.n_topics = 0;
        assert!(generate(&s).is_err());
    }
}
