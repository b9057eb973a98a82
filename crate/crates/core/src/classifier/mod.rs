//! One-vs-all topic classifiers over the semantic space.
//!
//! Positives are the articles whose title or abstract contains the topic name
//! as a phrase. Negatives are sampled from articles that mention the topic
//! name in no text field at all. A random forest trained on the embedding rows
//! then scores the whole corpus.

mod forest;

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use forest::{DecisionTree, ForestConfig, MaxFeatures, RandomForest, Samples};

use crate::corpus::{Corpus, ABSTRACT, TITLE};
use crate::error::{Error, Result};
use crate::index::{all_text_fields, Index};
use crate::ranked::{Origin, RankedEntry, RankedList};
use crate::scalar::Scalar;
use crate::semantic::SemanticMatrix;

/// Topic-retention threshold on the number of positive articles.
pub const DEFAULT_MIN_POSITIVES: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicDataset {
    pub topic: String,
    pub positives: Vec<String>,
    pub negatives: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetParams {
    pub neg_ratio: f64,
    pub min_positives: usize,
    pub seed: u64,
}

/// Builds the positive/negative training set for one topic.
///
/// `index` must cover every text field of `corpus` so the negative filter can
/// see keyword and subject mentions.
pub fn build_dataset(topic: &str, index: &Index, corpus: &Corpus, params: DatasetParams) -> Result<TopicDataset> {
    if !(params.neg_ratio.is_finite() && params.neg_ratio >= 0.0) {
        return Err(Error::Config(format!(
            "neg_ratio must be non-negative, got {}",
            params.neg_ratio
        )));
    }
    if index.num_docs() != corpus.len() {
        return Err(Error::invalid("index was built over a different corpus"));
    }
    let needed = all_text_fields(corpus);
    if let Some(missing) = needed.iter().find(|f| !index.fields().contains(f)) {
        return Err(Error::invalid(format!(
            "index does not cover field {missing:?}; negatives could mention the topic there"
        )));
    }
    let positive_fields = [TITLE.to_string(), ABSTRACT.to_string()];
    let hits = index.search_phrase(topic, &positive_fields, usize::MAX)?;
    if hits.len() < params.min_positives {
        return Err(Error::TooFewPositives {
            topic: topic.to_owned(),
            found: hits.len(),
            required: params.min_positives,
        });
    }
    let mut pos_ordinals: Vec<usize> = hits
        .iter()
        .map(|h| corpus.ordinal(&h.article_id).expect("index ids come from the corpus"))
        .collect();
    pos_ordinals.sort_unstable();

    let mentions = index.has_any_match(&[topic], &needed)?;
    let candidates: Vec<usize> = (0..corpus.len()).filter(|&i| !mentions[i]).collect();
    let wanted = (params.neg_ratio * pos_ordinals.len() as f64).ceil() as usize;
    let take = wanted.min(candidates.len());
    if take < wanted {
        log::warn!("{topic}: only {take} negative candidates for {wanted} requested");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut neg_ordinals: Vec<usize> = sample(&mut rng, candidates.len(), take)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    neg_ordinals.sort_unstable();

    let id = |i: usize| corpus.get(i).expect("ordinal in range").id.clone();
    Ok(TopicDataset {
        topic: topic.to_owned(),
        positives: pos_ordinals.into_iter().map(id).collect(),
        negatives: neg_ordinals.into_iter().map(id).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub positives: usize,
    pub negatives: usize,
    pub train_size: usize,
    pub holdout_size: usize,
    /// Accuracy at probability threshold 0.5 on the held-out split.
    pub holdout_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel<T> {
    pub topic: String,
    pub forest: RandomForest<T>,
    pub meta: TrainingMeta,
}

impl<T: Scalar> TopicModel<T> {
    pub fn predict_proba(&self, x: &[T]) -> T {
        self.forest.predict_proba(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainParams {
    pub forest: ForestConfig,
    /// Fraction of each class held out for the out-of-sample score.
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            forest: ForestConfig::default(),
            holdout_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Trains the topic's forest on a stratified split of the dataset.
pub fn train<T: Scalar>(
    dataset: &TopicDataset,
    sem: &SemanticMatrix<T>,
    params: &TrainParams,
) -> Result<TopicModel<T>> {
    if dataset.positives.is_empty() || dataset.negatives.is_empty() {
        return Err(Error::invalid(format!(
            "{}: dataset has a single class ({} positives, {} negatives)",
            dataset.topic,
            dataset.positives.len(),
            dataset.negatives.len()
        )));
    }
    if !(0.0..1.0).contains(&params.holdout_fraction) {
        return Err(Error::Config(format!(
            "holdout_fraction must lie in [0, 1), got {}",
            params.holdout_fraction
        )));
    }
    let pos: HashSet<&str> = dataset.positives.iter().map(String::as_str).collect();
    if dataset.negatives.iter().any(|n| pos.contains(n.as_str())) {
        return Err(Error::invalid(format!(
            "{}: an article is both positive and negative",
            dataset.topic
        )));
    }
    let rows = |ids: &[String]| -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                sem.row_of(id)
                    .ok_or_else(|| Error::invalid(format!("article {id:?} has no embedding row")))
            })
            .collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut split = |mut r: Vec<usize>| {
        r.shuffle(&mut rng);
        let hold = ((r.len() as f64) * params.holdout_fraction).floor() as usize;
        // Keep at least one training example per class.
        let hold = hold.min(r.len() - 1);
        let train = r.split_off(hold);
        (train, r)
    };
    let (pos_train, pos_hold) = split(rows(&dataset.positives)?);
    let (neg_train, neg_hold) = split(rows(&dataset.negatives)?);

    let gather = |p: &[usize], n: &[usize]| {
        let mut x = Vec::with_capacity((p.len() + n.len()) * sem.dims());
        let mut y = Vec::with_capacity(p.len() + n.len());
        for (&r, label) in p.iter().map(|r| (r, true)).chain(n.iter().map(|r| (r, false))) {
            x.extend_from_slice(sem.row(r));
            y.push(label);
        }
        (x, y)
    };
    let (x, y) = gather(&pos_train, &neg_train);
    let forest = RandomForest::fit(Samples::new(&x, sem.dims(), &y)?, &params.forest, params.seed)?;

    let holdout_size = pos_hold.len() + neg_hold.len();
    let holdout_accuracy = (holdout_size > 0).then(|| {
        let half = T::of(0.5);
        let correct = pos_hold
            .iter()
            .filter(|&&r| forest.predict_proba(sem.row(r)) > half)
            .count()
            + neg_hold
                .iter()
                .filter(|&&r| forest.predict_proba(sem.row(r)) <= half)
                .count();
        correct as f64 / holdout_size as f64
    });
    Ok(TopicModel {
        topic: dataset.topic.clone(),
        forest,
        meta: TrainingMeta {
            positives: dataset.positives.len(),
            negatives: dataset.negatives.len(),
            train_size: y.len(),
            holdout_size,
            holdout_accuracy,
        },
    })
}

/// Scores every embedding row and keeps the `top_n` most probable articles.
pub fn rank_corpus<T: Scalar>(model: &TopicModel<T>, sem: &SemanticMatrix<T>, top_n: usize) -> Result<RankedList> {
    if top_n == 0 {
        return Err(Error::Config("top_n must be at least 1".into()));
    }
    if model.forest.dims() != sem.dims() {
        return Err(Error::invalid(format!(
            "model expects {} features, embedding has {}",
            model.forest.dims(),
            sem.dims()
        )));
    }
    let entries: Vec<RankedEntry> = (0..sem.rows())
        .into_par_iter()
        .map(|r| RankedEntry {
            article_id: sem.ids()[r].clone(),
            score: model.predict_proba(sem.row(r)).as_f64(),
        })
        .collect();
    let mut list = RankedList::new(model.topic.clone(), Origin::Classifier, entries)?;
    list.truncate(top_n);
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ArticleRecord;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn rec(id: String, abs: &str) -> ArticleRecord {
        ArticleRecord {
            id,
            title: "article".into(),
            abstract_text: abs.into(),
            keywords: vec![],
            subjects: vec![],
            extra_category_fields: Default::default(),
        }
    }

    fn planted() -> Corpus {
        let mut recs = Vec::new();
        for i in 0..50 {
            recs.push(rec(format!("p{i:02}"), "advances in robotics and control"));
        }
        for i in 0..80 {
            recs.push(rec(format!("n{i:02}"), "notes on soil chemistry"));
        }
        let mut kw = rec("kw".into(), "notes on soil chemistry");
        kw.keywords = vec!["Robotics".into()];
        recs.push(kw);
        Corpus::from_records(recs).unwrap()
    }

    fn full_index(c: &Corpus) -> Index {
        Index::build(c, &all_text_fields(c)).unwrap()
    }

    fn params(neg_ratio: f64, seed: u64) -> DatasetParams {
        DatasetParams {
            neg_ratio,
            min_positives: 10,
            seed,
        }
    }

    #[test]
    fn dataset_positives_and_negatives() {
        let c = planted();
        let idx = full_index(&c);
        let d = build_dataset("Robotics", &idx, &c, params(1.0, 4)).unwrap();
        assert_eq!(d.positives.len(), 50);
        assert_eq!(d.negatives.len(), 50);
        assert!(!d.positives.contains(&"kw".to_string()));
        assert!(!d.negatives.contains(&"kw".to_string()));
        assert!(d.negatives.iter().all(|n| n.starts_with('n')));
        assert_eq!(d, build_dataset("Robotics", &idx, &c, params(1.0, 4)).unwrap());
        assert_ne!(
            d.negatives,
            build_dataset("Robotics", &idx, &c, params(1.0, 5)).unwrap().negatives
        );

        let half = build_dataset("Robotics", &idx, &c, params(0.5, 4)).unwrap();
        assert_eq!(half.negatives.len(), 25);
    }

    #[test]
    fn too_few_positives_is_reported() {
        let c = planted();
        let idx = full_index(&c);
        let err = build_dataset(
            "Robotics",
            &idx,
            &c,
            DatasetParams {
                min_positives: 100,
                ..params(1.0, 0)
            },
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::TooFewPositives {
                found: 50,
                required: 100,
                ..
            }
        ));
        assert!(build_dataset("!!", &idx, &c, params(1.0, 0)).is_err());
    }

    #[test]
    fn index_must_cover_all_fields() {
        let c = planted();
        let idx = Index::build(&c, &[TITLE.to_string(), ABSTRACT.to_string()]).unwrap();
        assert!(build_dataset("Robotics", &idx, &c, params(1.0, 0)).is_err());
    }

    /// Two Gaussian blobs in 10 dimensions, centers 6 units apart.
    fn blobs(n: usize, seed: u64) -> (SemanticMatrix<f64>, TopicDataset) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = 10;
        let mut data = Vec::new();
        let mut ids = Vec::new();
        for i in 0..2 * n {
            let center = if i < n { 3.0 } else { -3.0 };
            for d in 0..dims {
                let c = if d < 2 { center } else { 0.0 };
                let g: f64 = StandardNormal.sample(&mut rng);
                data.push(c + g);
            }
            ids.push(format!("a{i:03}"));
        }
        let sem = SemanticMatrix::from_rows(ids.clone(), dims, data, 0).unwrap();
        let ds = TopicDataset {
            topic: "T".into(),
            positives: ids[..n].to_vec(),
            negatives: ids[n..].to_vec(),
        };
        (sem, ds)
    }

    /// Independent nearest-centroid classifier used as a sanity oracle.
    fn nearest_centroid_accuracy(sem: &SemanticMatrix<f64>, ds: &TopicDataset, holdout: &[String]) -> f64 {
        let train_rows = |ids: &[String]| -> Vec<usize> {
            ids.iter()
                .filter(|i| !holdout.contains(i))
                .map(|i| sem.row_of(i).unwrap())
                .collect()
        };
        let centroid = |rows: Vec<usize>| -> Vec<f64> {
            let mut c = vec![0.0; sem.dims()];
            for &r in &rows {
                for (a, b) in c.iter_mut().zip(sem.row(r)) {
                    *a += b / rows.len() as f64;
                }
            }
            c
        };
        let cp = centroid(train_rows(&ds.positives));
        let cn = centroid(train_rows(&ds.negatives));
        let d2 = |x: &[f64], c: &[f64]| x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let correct = holdout
            .iter()
            .filter(|id| {
                let x = sem.vector(id).unwrap();
                (d2(x, &cp) < d2(x, &cn)) == ds.positives.contains(id)
            })
            .count();
        correct as f64 / holdout.len() as f64
    }

    #[test]
    fn separable_blobs_reach_high_holdout_accuracy() {
        let (sem, ds) = blobs(100, 21);
        let p = TrainParams {
            seed: 3,
            ..Default::default()
        };
        let m = train(&ds, &sem, &p).unwrap();
        assert_eq!(m.meta.holdout_size, 40);
        assert_eq!(m.meta.train_size, 160);
        let acc = m.meta.holdout_accuracy.unwrap();
        assert!(acc >= 0.95, "forest accuracy {acc}");

        let holdout: Vec<String> = ds.positives[..20].iter().chain(&ds.negatives[..20]).cloned().collect();
        let oracle = nearest_centroid_accuracy(&sem, &ds, &holdout);
        assert!(oracle >= 0.95, "oracle accuracy {oracle}");
    }

    #[test]
    fn training_is_deterministic_and_probabilities_bounded() {
        let (sem, ds) = blobs(40, 2);
        let p = TrainParams {
            forest: ForestConfig {
                n_trees: 20,
                ..Default::default()
            },
            holdout_fraction: 0.2,
            seed: 8,
        };
        let a = train(&ds, &sem, &p).unwrap();
        let b = train(&ds, &sem, &p).unwrap();
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(-10.0..10.0)).collect();
            let pr = a.predict_proba(&x);
            assert!((0.0..=1.0).contains(&pr));
        }
    }

    #[test]
    fn single_class_dataset_is_fatal() {
        let (sem, mut ds) = blobs(10, 1);
        ds.negatives.clear();
        assert!(train(&ds, &sem, &TrainParams::default()).is_err());
    }

    #[test]
    fn ranking_contract() {
        let (sem, ds) = blobs(60, 5);
        let m = train(
            &ds,
            &sem,
            &TrainParams {
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let all = rank_corpus(&m, &sem, 10_000).unwrap();
        assert_eq!(all.len(), sem.rows());
        assert_eq!(all.origin(), Origin::Classifier);
        assert!(all.entries().windows(2).all(|w| w[0].score >= w[1].score));
        let top = rank_corpus(&m, &sem, 7).unwrap();
        assert_eq!(top.entries(), &all.entries()[..7]);
        assert!(rank_corpus(&m, &sem, 0).is_err());

        // Training positives should sit above training negatives.
        let rank_of: std::collections::HashMap<&str, usize> =
            all.ranked().map(|(r, e)| (e.article_id.as_str(), r)).collect();
        let median = |ids: &[String]| {
            let mut r: Vec<usize> = ids.iter().map(|i| rank_of[i.as_str()]).collect();
            r.sort_unstable();
            r[r.len() / 2]
        };
        assert!(median(&ds.positives) < median(&ds.negatives));
    }
}
