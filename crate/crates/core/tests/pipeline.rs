use std::path::Path;

use metatag::benchmark::{generate, BenchmarkSpec};
use metatag::fusion::load_assignments;
use metatag::pipeline::{bench, fusion_method, Overrides, Pipeline, Precision, RunConfig, SYNSET_METHOD};
use metatag::{Error, Origin, RankedList};

fn small_spec() -> BenchmarkSpec {
    BenchmarkSpec {
        n_topics: 3,
        docs_per_topic: 120,
        background_vocab_size: 400,
        doc_length: 40,
        seed: 3,
        ..BenchmarkSpec::default()
    }
}

fn small_config(dir: &Path) -> RunConfig {
    let bm = generate(&small_spec()).unwrap();
    let data = dir.join("data");
    bm.write(&data).unwrap();
    let mut cfg = RunConfig::default();
    cfg.topics = bm.topic_names();
    cfg.paths.corpus = Some(data.join("corpus.jsonl"));
    cfg.paths.synsets = Some(data.join("synsets.json"));
    cfg.paths.ground_truth = Some(data.join("truth.jsonl"));
    cfg.paths.output_dir = dir.join("out");
    cfg.semantic.k = 20;
    cfg.classifier.min_positives = 10;
    cfg.classifier.forest.n_trees = 15;
    cfg.fusion.a = metatag::pipeline::Multipliers::Many(vec![1, 2]);
    cfg.benchmark = small_spec();
    cfg
}

#[test]
fn stages_run_in_order_and_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(small_config(dir.path())).unwrap();
    p.index().unwrap();
    assert!(p.embed().unwrap().is_some());
    let report = p.train_rank().unwrap();
    assert_eq!(report.trained.len(), 3);
    assert!(report.skipped.is_empty());
    let sizes = p.synset().unwrap();
    assert_eq!(sizes.len(), 3);
    p.fuse().unwrap();
    let table = p.eval().unwrap();
    assert_eq!(table.reports.len(), 3);
    assert!(table.get(SYNSET_METHOD).is_some());

    for t in &p.config().topics {
        let s = RankedList::load(&p.ranked_path(Origin::Synset, t)).unwrap();
        assert_eq!(s.len(), sizes[t]);
        let f = RankedList::load(
            &p.fusion_dir(2)
                .join(format!("{}.tsv", metatag::pipeline::topic_slug(t))),
        )
        .unwrap();
        assert_eq!(f.origin(), Origin::Fusion);
        assert!(f.len() <= 2 * s.len());
    }
    assert!(!load_assignments(&p.fusion_tags_path(1)).unwrap().is_empty());
    for f in ["report.txt", "report.json", "plot.tsv"] {
        assert!(p.eval_dir().join(f).is_file());
    }
    let m = p.manifest().unwrap();
    assert_eq!(m.stages.len(), 6);
    assert!(m
        .stages
        .values()
        .all(|e| e.config_hash == p.config_hash() && e.seed == p.config().seed));
    assert!(m.stages["synset"].facts.contains_key("synset_sizes"));
}

#[test]
fn downstream_stage_names_the_missing_command() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(small_config(dir.path())).unwrap();
    match p.fuse().unwrap_err() {
        Error::MissingArtifact { command, .. } => assert_eq!(command, "train-rank"),
        e => panic!("unexpected {e}"),
    }
    p.index().unwrap();
    match p.train_rank().unwrap_err() {
        Error::MissingArtifact { command, .. } => assert_eq!(command, "embed"),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn changed_corpus_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let p = Pipeline::new(cfg.clone()).unwrap();
    p.index().unwrap();
    let corpus = cfg.paths.corpus.unwrap();
    let mut text = std::fs::read_to_string(&corpus).unwrap();
    text.push('\n');
    std::fs::write(&corpus, text).unwrap();
    let err = p.synset().unwrap_err();
    assert_eq!(err.category(), "pipeline");
    assert!(err.to_string().contains("index"), "{err}");
}

#[test]
fn topics_with_few_positives_are_skipped_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.classifier.min_positives = 10_000;
    let p = Pipeline::new(cfg).unwrap();
    p.index().unwrap();
    p.embed().unwrap();
    let report = p.train_rank().unwrap();
    assert!(report.trained.is_empty());
    assert_eq!(report.skipped.len(), 3);
    assert!(report.skipped.iter().all(|s| s.required == 10_000 && s.found > 0));
    p.synset().unwrap();
    p.fuse().unwrap();
    assert!(load_assignments(&p.fusion_tags_path(2)).unwrap().is_empty());
}

#[test]
fn single_precision_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.semantic.precision = Precision::F32;
    let table = Pipeline::new(cfg).unwrap().all().unwrap();
    assert!(table.get(&fusion_method(2)).unwrap().recall > 0.0);
}

#[test]
fn config_file_paths_are_relative_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let topics: Vec<String> = cfg.topics.iter().map(|t| format!("{t:?}")).collect();
    let toml = format!(
        "seed = 5\ntopics = [{}]\n[paths]\ncorpus = \"data/corpus.jsonl\"\nsynsets = \"data/synsets.json\"\noutput_dir = \"run\"\n",
        topics.join(", ")
    );
    let path = dir.path().join("run.toml");
    std::fs::write(&path, toml).unwrap();
    let overrides = Overrides {
        seed: Some(11),
        topics: Some(vec![cfg.topics[0].clone()]),
        a: Some(vec![3]),
    };
    let p = Pipeline::from_file(&path, &overrides).unwrap();
    assert_eq!(p.output_dir(), dir.path().join("run"));
    assert_eq!(p.config().seed, 11);
    assert_eq!(p.config().topics.len(), 1);
    assert_eq!(p.config().fusion.a.values(), [3]);

    std::fs::write(
        &path,
        "topics = [\"x\"]\n[paths]\ncorpus = \"nope.jsonl\"\nsynsets = \"nope.json\"\n",
    )
    .unwrap();
    let err = Pipeline::from_file(&path, &Overrides::default()).err().unwrap();
    assert_eq!(err.category(), "config");
}

#[test]
fn bench_generates_data_and_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.paths.output_dir = dir.path().join("bench");
    let (p, table) = bench(cfg).unwrap();
    assert!(p.output_dir().join("data/truth.jsonl").is_file());
    let syn = table.get(SYNSET_METHOD).unwrap();
    let f2 = table.get(&fusion_method(2)).unwrap();
    assert!(f2.intersection_size >= syn.intersection_size);
}
