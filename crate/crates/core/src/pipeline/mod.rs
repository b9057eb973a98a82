//! Stage-by-stage driver. Each stage reads the artifacts of earlier stages
//! from the output directory and records itself in `manifest.json`.

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    ClassifierConfig, FusionSettings, GroundTruthConfig, Multipliers, Paths, Precision, RunConfig, SemanticConfig,
    SynsetConfig,
};
pub use manifest::{sha256_file, Manifest, StageEntry, MANIFEST_FILE};

use crate::benchmark::generate;
use crate::classifier::{build_dataset, rank_corpus, train, DatasetParams, TrainParams};
use crate::corpus::{build_ground_truth, ingest_corpus, Corpus, GroundTruth};
use crate::error::{Error, Result};
use crate::evaluation::{sweep, SweepTable};
use crate::fusion::{fuse, invert, invert_lists, load_assignments, save_assignments, FusionConfig, TagAssignment};
use crate::index::{all_text_fields, Index};
use crate::ranked::{Origin, RankedList};
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use crate::semantic::{
    embedding_quality, fit_vocabulary, truncated_svd, vectorize, QualityReport, SemanticMatrix, SvdParams,
    TYPICAL_DIMENSIONS,
};
use crate::synset::{load_synsets, synset_rank};

pub const STAGE_INDEX: &str = "index";
pub const STAGE_EMBED: &str = "embed";
pub const STAGE_TRAIN_RANK: &str = "train-rank";
pub const STAGE_SYNSET: &str = "synset";
pub const STAGE_FUSE: &str = "fuse";
pub const STAGE_EVAL: &str = "eval";

/// Method name used for the synset-only baseline in evaluation reports.
pub const SYNSET_METHOD: &str = "Synset";

pub fn fusion_method(a: u32) -> String {
    format!("Fusion{a}")
}

/// File-name form of a topic: lowercase alphanumerics joined by `_`.
pub fn topic_slug(topic: &str) -> String {
    crate::tokenize::word_vec(topic).join("_")
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub topics: Option<Vec<String>>,
    pub a: Option<Vec<u32>>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = &self.topics {
            cfg.topics = t.clone();
        }
        if let Some(a) = &self.a {
            cfg.fusion.a = Multipliers::Many(a.clone());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedTopic {
    pub topic: String,
    pub positives: usize,
    pub negatives: usize,
    pub train_size: usize,
    pub holdout_size: usize,
    pub holdout_accuracy: Option<f64>,
    pub ranked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedTopic {
    pub topic: String,
    pub found: usize,
    pub required: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub trained: Vec<TrainedTopic>,
    pub skipped: Vec<SkippedTopic>,
}

impl TrainingReport {
    pub fn trained_topics(&self) -> Vec<String> {
        self.trained.iter().map(|t| t.topic.clone()).collect()
    }
}

pub struct Pipeline {
    cfg: RunConfig,
    config_hash: String,
    out: PathBuf,
}

impl Pipeline {
    /// Loads a TOML config, applies overrides and resolves relative paths
    /// against the config file's directory.
    pub fn from_file(path: &Path, overrides: &Overrides) -> Result<Self> {
        let mut cfg = RunConfig::load(path)?;
        overrides.apply(&mut cfg);
        let hash = cfg.hash();
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve_paths(&base);
        Self::with_hash(cfg, hash)
    }

    /// Uses `cfg` as is; relative paths are taken relative to the working directory.
    pub fn new(cfg: RunConfig) -> Result<Self> {
        let hash = cfg.hash();
        Self::with_hash(cfg, hash)
    }

    fn with_hash(cfg: RunConfig, config_hash: String) -> Result<Self> {
        cfg.validate()?;
        cfg.check_inputs()?;
        let mut slugs = BTreeMap::new();
        for t in &cfg.topics {
            if let Some(prev) = slugs.insert(topic_slug(t), t) {
                return Err(Error::Config(format!(
                    "topics {prev:?} and {t:?} map to the same file name"
                )));
            }
        }
        let out = cfg.paths.output_dir.clone();
        std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        Ok(Self { cfg, config_hash, out })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn output_dir(&self) -> &Path {
        &self.out
    }

    pub fn manifest(&self) -> Result<Manifest> {
        Manifest::load_or_default(&self.out)
    }

    pub fn index_path(&self) -> PathBuf {
        self.out.join("index.json")
    }

    pub fn embedding_path(&self) -> PathBuf {
        self.out.join("embedding.bin")
    }

    pub fn ranked_path(&self, origin: Origin, topic: &str) -> PathBuf {
        self.out
            .join("ranked")
            .join(origin.as_str())
            .join(format!("{}.tsv", topic_slug(topic)))
    }

    pub fn training_report_path(&self) -> PathBuf {
        self.out.join("ranked").join("classifier").join("training.json")
    }

    pub fn synset_tags_path(&self) -> PathBuf {
        self.out.join("ranked").join("synset").join("tags.jsonl")
    }

    pub fn fusion_dir(&self, a: u32) -> PathBuf {
        self.out.join("fusion").join(format!("a{a}"))
    }

    pub fn fusion_tags_path(&self, a: u32) -> PathBuf {
        self.fusion_dir(a).join("tags.jsonl")
    }

    pub fn eval_dir(&self) -> PathBuf {
        self.out.join("eval")
    }

    fn corpus_path(&self) -> &Path {
        self.cfg.paths.corpus.as_deref().expect("checked at construction")
    }

    fn synsets_path(&self) -> &Path {
        self.cfg.paths.synsets.as_deref().expect("checked at construction")
    }

    fn load_corpus(&self) -> Result<Corpus> {
        let ingested = ingest_corpus(self.corpus_path())?;
        if !ingested.skipped.is_empty() {
            log::warn!("{} corpus records skipped", ingested.skipped.len());
        }
        Ok(ingested.corpus)
    }

    fn ground_truth(&self, corpus: &Corpus) -> Result<GroundTruth> {
        match &self.cfg.paths.ground_truth {
            Some(p) => {
                let gt = GroundTruth::load(p)?.restrict_to(&self.cfg.topics);
                let unknown = gt.unknown_ids(corpus);
                if !unknown.is_empty() {
                    log::warn!("{} ground-truth ids are not in the corpus", unknown.len());
                }
                Ok(gt)
            }
            None => build_ground_truth(corpus, &self.cfg.topics, &self.cfg.ground_truth.fields),
        }
    }

    fn require(&self, stages: &[&'static str]) -> Result<()> {
        let m = self.manifest()?;
        for &s in stages {
            m.verify_stage(&self.out, s)?;
            if m.stages[s].config_hash != self.config_hash {
                log::warn!("`{s}` ran with a different configuration");
            }
        }
        Ok(())
    }

    fn record(
        &self,
        stage: &str,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
        facts: BTreeMap<String, serde_json::Value>,
        started: Instant,
    ) -> Result<()> {
        let hashes = |paths: &[PathBuf]| -> Result<BTreeMap<String, String>> {
            paths
                .iter()
                .map(|p| Ok((manifest::display_key(&self.out, p), sha256_file(p)?)))
                .collect()
        };
        let entry = StageEntry {
            config_hash: self.config_hash.clone(),
            seed: self.cfg.seed,
            inputs: hashes(inputs)?,
            outputs: hashes(outputs)?,
            facts,
            elapsed_ms: started.elapsed().as_millis(),
        };
        let mut m = self.manifest()?;
        m.stages.insert(stage.to_owned(), entry);
        m.save(&self.out)?;
        log::info!("{stage} finished in {} ms", started.elapsed().as_millis());
        Ok(())
    }

    /// Builds the inverted index over every text field of the corpus.
    pub fn index(&self) -> Result<()> {
        let started = Instant::now();
        let corpus = self.load_corpus()?;
        let fields = all_text_fields(&corpus);
        let index = Index::build(&corpus, &fields)?;
        index.save(&self.index_path())?;
        let facts = BTreeMap::from([
            ("documents".to_owned(), corpus.len().into()),
            ("terms".to_owned(), index.num_terms().into()),
        ]);
        self.record(
            STAGE_INDEX,
            &[self.corpus_path().to_owned()],
            &[self.index_path()],
            facts,
            started,
        )
    }

    /// Builds the semantic matrix. When ground truth is available an
    /// embedding-quality diagnostic is written next to it.
    pub fn embed(&self) -> Result<Option<QualityReport>> {
        match self.cfg.semantic.precision {
            Precision::F32 => self.embed_as::<f32>(),
            Precision::F64 => self.embed_as::<f64>(),
        }
    }

    fn embed_as<T: Scalar>(&self) -> Result<Option<QualityReport>> {
        let started = Instant::now();
        let sc = &self.cfg.semantic;
        if !TYPICAL_DIMENSIONS.contains(&sc.k) {
            log::warn!("k = {} is outside the usual range {TYPICAL_DIMENSIONS:?}", sc.k);
        }
        let corpus = self.load_corpus()?;
        let vocab = fit_vocabulary(&corpus, sc.min_df, sc.max_df_fraction)?;
        let x = vectorize::<T>(&corpus, &vocab);
        if !x.empty_rows.is_empty() {
            log::warn!("{} articles have no in-vocabulary terms", x.empty_rows.len());
        }
        let params = SvdParams {
            rank: sc.k,
            oversample: sc.oversample,
            power_iters: sc.power_iters,
            seed: derive_seed(self.cfg.seed, "embed"),
        };
        let ids = corpus.iter().map(|r| r.id.clone()).collect();
        let sem = truncated_svd(&x, ids, params)?.with_vocab_fingerprint(vocab.fingerprint());
        sem.save(&self.embedding_path())?;

        let mut inputs = vec![self.corpus_path().to_owned()];
        let mut outputs = vec![self.embedding_path()];
        let truth = self.ground_truth(&corpus)?;
        let quality = match embedding_quality(&sem, &truth, derive_seed(self.cfg.seed, "quality")) {
            Ok(q) => {
                log::info!(
                    "embedding quality: intra-topic {:.4}, random {:.4}, gap {:.4}",
                    q.intra_topic_mean,
                    q.random_pair_mean,
                    q.gap
                );
                let path = self.out.join("embedding_quality.json");
                let json = serde_json::json!({
                    "intra_topic_mean": q.intra_topic_mean,
                    "random_pair_mean": q.random_pair_mean,
                    "gap": q.gap,
                    "intra_pairs": q.intra_pairs,
                    "random_pairs": q.random_pairs,
                    "topics_used": q.topics_used,
                });
                write_text(&path, &(serde_json::to_string_pretty(&json).expect("json") + "\n"))?;
                outputs.push(path);
                if let Some(p) = &self.cfg.paths.ground_truth {
                    inputs.push(p.clone());
                }
                Some(q)
            }
            Err(e) => {
                log::warn!("embedding quality skipped: {e}");
                None
            }
        };
        let facts = BTreeMap::from([
            ("dimensions".to_owned(), sem.dims().into()),
            ("vocabulary".to_owned(), vocab.len().into()),
            ("empty_rows".to_owned(), x.empty_rows.len().into()),
        ]);
        self.record(STAGE_EMBED, &inputs, &outputs, facts, started)?;
        Ok(quality)
    }

    /// Trains one forest per topic and writes each classifier ranking.
    /// Topics with too few positives are skipped and listed in the report.
    pub fn train_rank(&self) -> Result<TrainingReport> {
        match self.cfg.semantic.precision {
            Precision::F32 => self.train_rank_as::<f32>(),
            Precision::F64 => self.train_rank_as::<f64>(),
        }
    }

    fn train_rank_as<T: Scalar>(&self) -> Result<TrainingReport> {
        let started = Instant::now();
        self.require(&[STAGE_INDEX, STAGE_EMBED])?;
        let corpus = self.load_corpus()?;
        let index = Index::load(&self.index_path())?;
        let sem = SemanticMatrix::<T>::load(&self.embedding_path())?;
        if sem.rows() != corpus.len() || sem.ids().iter().zip(corpus.iter()).any(|(a, r)| *a != r.id) {
            return Err(Error::Artifact {
                path: self.embedding_path(),
                message: format!("rows do not match the corpus; run `{STAGE_EMBED}` again"),
            });
        }
        let cc = &self.cfg.classifier;
        let outcomes: Vec<Result<std::result::Result<(TrainedTopic, RankedList), SkippedTopic>>> = self
            .cfg
            .topics
            .par_iter()
            .map(|topic| {
                let dp = DatasetParams {
                    neg_ratio: cc.neg_ratio,
                    min_positives: cc.min_positives,
                    seed: derive_seed(self.cfg.seed, &format!("dataset/{topic}")),
                };
                let dataset = match build_dataset(topic, &index, &corpus, dp) {
                    Ok(d) => d,
                    Err(Error::TooFewPositives { topic, found, required }) => {
                        log::warn!("skipping {topic:?}: {found} positives, {required} required");
                        return Ok(Err(SkippedTopic { topic, found, required }));
                    }
                    Err(e) => return Err(e),
                };
                let tp = TrainParams {
                    forest: cc.forest.clone(),
                    holdout_fraction: cc.holdout_fraction,
                    seed: derive_seed(self.cfg.seed, &format!("train/{topic}")),
                };
                let model = train(&dataset, &sem, &tp)?;
                let list = rank_corpus(&model, &sem, cc.top_n)?;
                let m = &model.meta;
                log::info!(
                    "{topic}: {} positives, {} negatives, holdout accuracy {:?}",
                    m.positives,
                    m.negatives,
                    m.holdout_accuracy
                );
                Ok(Ok((
                    TrainedTopic {
                        topic: topic.clone(),
                        positives: m.positives,
                        negatives: m.negatives,
                        train_size: m.train_size,
                        holdout_size: m.holdout_size,
                        holdout_accuracy: m.holdout_accuracy,
                        ranked: list.len(),
                    },
                    list,
                )))
            })
            .collect();

        let mut report = TrainingReport::default();
        let mut outputs = Vec::new();
        for outcome in outcomes {
            match outcome? {
                Ok((t, list)) => {
                    let path = self.ranked_path(Origin::Classifier, &t.topic);
                    list.save(&path)?;
                    outputs.push(path);
                    report.trained.push(t);
                }
                Err(s) => report.skipped.push(s),
            }
        }
        let path = self.training_report_path();
        write_text(&path, &(serde_json::to_string_pretty(&report).expect("json") + "\n"))?;
        outputs.push(path);
        let inputs = [self.corpus_path().to_owned(), self.index_path(), self.embedding_path()];
        self.record(STAGE_TRAIN_RANK, &inputs, &outputs, BTreeMap::new(), started)?;
        Ok(report)
    }

    /// Ranks synset matches per topic and writes the synset-only tagging.
    pub fn synset(&self) -> Result<BTreeMap<String, usize>> {
        let started = Instant::now();
        self.require(&[STAGE_INDEX])?;
        let index = Index::load(&self.index_path())?;
        let synsets = load_synsets(self.synsets_path(), &self.cfg.topics)?;
        let limit = self.cfg.synset.limit.unwrap_or(usize::MAX);
        let lists: BTreeMap<String, RankedList> = synsets
            .par_iter()
            .map(|(t, s)| Ok((t.clone(), synset_rank(s, &index, &self.cfg.synset.fields, limit)?)))
            .collect::<Result<_>>()?;
        let mut outputs = Vec::new();
        let mut sizes = BTreeMap::new();
        for (t, list) in &lists {
            if list.is_empty() {
                log::warn!("synset for {t:?} matched no articles");
            }
            let path = self.ranked_path(Origin::Synset, t);
            list.save(&path)?;
            outputs.push(path);
            sizes.insert(t.clone(), list.len());
        }
        let tags = invert_lists(&lists, Origin::Synset, self.cfg.fusion.score_threshold)?;
        save_assignments(&self.synset_tags_path(), &tags)?;
        outputs.push(self.synset_tags_path());
        let facts = BTreeMap::from([("synset_sizes".to_owned(), serde_json::to_value(&sizes).expect("json"))]);
        let inputs = [self.synsets_path().to_owned(), self.index_path()];
        self.record(STAGE_SYNSET, &inputs, &outputs, facts, started)?;
        Ok(sizes)
    }

    /// Fuses the two rankings for every configured multiplier.
    pub fn fuse(&self) -> Result<()> {
        let started = Instant::now();
        self.require(&[STAGE_TRAIN_RANK, STAGE_SYNSET])?;
        let report: TrainingReport = read_json(&self.training_report_path())?;
        let topics = report.trained_topics();
        let mut inputs = vec![self.training_report_path()];
        let mut pairs = Vec::new();
        for t in &topics {
            let (sp, rp) = (
                self.ranked_path(Origin::Synset, t),
                self.ranked_path(Origin::Classifier, t),
            );
            pairs.push((t.clone(), RankedList::load(&sp)?, RankedList::load(&rp)?));
            inputs.push(sp);
            inputs.push(rp);
        }
        let mut outputs = Vec::new();
        for a in self.cfg.fusion.a.values() {
            let fc = FusionConfig::new(a)?;
            let mut lists = BTreeMap::new();
            for (t, s, r) in &pairs {
                let f = fuse(s, r, &fc)?;
                let path = self.fusion_dir(a).join(format!("{}.tsv", topic_slug(t)));
                f.save(&path)?;
                outputs.push(path);
                lists.insert(t.clone(), f);
            }
            let tags = invert(&lists, self.cfg.fusion.score_threshold)?;
            save_assignments(&self.fusion_tags_path(a), &tags)?;
            outputs.push(self.fusion_tags_path(a));
        }
        self.record(STAGE_FUSE, &inputs, &outputs, BTreeMap::new(), started)
    }

    /// Scores the synset baseline and every fusion multiplier against the
    /// ground truth and writes the table, JSON and plot series.
    pub fn eval(&self) -> Result<SweepTable> {
        let started = Instant::now();
        self.require(&[STAGE_SYNSET, STAGE_FUSE])?;
        let corpus = self.load_corpus()?;
        let truth = self.ground_truth(&corpus)?;
        let mut inputs = vec![self.corpus_path().to_owned(), self.synset_tags_path()];
        if let Some(p) = &self.cfg.paths.ground_truth {
            inputs.push(p.clone());
        }
        let mut methods: Vec<(String, Vec<TagAssignment>)> =
            vec![(SYNSET_METHOD.to_owned(), load_assignments(&self.synset_tags_path())?)];
        for a in self.cfg.fusion.a.values() {
            let p = self.fusion_tags_path(a);
            if !p.exists() {
                return Err(Error::MissingArtifact {
                    path: p,
                    command: STAGE_FUSE,
                });
            }
            methods.push((fusion_method(a), load_assignments(&p)?));
            inputs.push(p);
        }
        let table = sweep(&methods, &truth, &self.cfg.topics)?;
        let dir = self.eval_dir();
        let outputs = [dir.join("report.txt"), dir.join("report.json"), dir.join("plot.tsv")];
        write_text(&outputs[0], &table.to_string())?;
        write_text(&outputs[1], &table.to_json())?;
        write_text(&outputs[2], &table.plot_series())?;
        self.record(STAGE_EVAL, &inputs, &outputs, BTreeMap::new(), started)?;
        Ok(table)
    }

    /// Runs every stage in order.
    pub fn all(&self) -> Result<SweepTable> {
        self.index()?;
        self.embed()?;
        let report = self.train_rank()?;
        if report.trained.is_empty() {
            log::warn!("no topic had enough positives; fusion lists will be empty");
        }
        self.synset()?;
        self.fuse()?;
        self.eval()
    }
}

/// Generates the synthetic benchmark into `<output_dir>/data` and runs every
/// stage on it. Topics and input paths in `cfg` are replaced.
pub fn bench(mut cfg: RunConfig) -> Result<(Pipeline, SweepTable)> {
    let bm = generate(&cfg.benchmark)?;
    let data = cfg.paths.output_dir.join("data");
    bm.write(&data)?;
    cfg.topics = bm.topic_names();
    cfg.paths.corpus = Some(data.join("corpus.jsonl"));
    cfg.paths.synsets = Some(data.join("synsets.json"));
    cfg.paths.ground_truth = Some(data.join("truth.jsonl"));
    let p = Pipeline::new(cfg)?;
    let table = p.all()?;
    Ok((p, table))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    crate::error::ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Artifact {
        path: path.to_owned(),
        message: e.to_string(),
    })
}
