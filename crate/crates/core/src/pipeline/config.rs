use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::benchmark::BenchmarkSpec;
use crate::classifier::{ForestConfig, DEFAULT_MIN_POSITIVES};
use crate::corpus::{KEYWORDS, SUBJECTS};
use crate::error::{Error, Result};
use crate::semantic::DEFAULT_DIMENSIONS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Topic names; `bench` fills these from the generated corpus.
    #[serde(default)]
    pub topics: Vec<String>,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub ground_truth: GroundTruthConfig,
    #[serde(default)]
    pub semantic: SemanticConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub synset: SynsetConfig,
    #[serde(default)]
    pub fusion: FusionSettings,
    #[serde(default)]
    pub benchmark: BenchmarkSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub synsets: Option<PathBuf>,
    /// Line-delimited `{id, topics}` file; when absent the test set is built
    /// from the corpus fields listed under `[ground_truth]`.
    pub ground_truth: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            corpus: None,
            synsets: None,
            ground_truth: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundTruthConfig {
    pub fields: Vec<String>,
}

impl Default for GroundTruthConfig {
    fn default() -> Self {
        Self {
            fields: vec![KEYWORDS.into(), SUBJECTS.into()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemanticConfig {
    pub k: usize,
    pub min_df: usize,
    pub max_df_fraction: f64,
    pub oversample: usize,
    pub power_iters: usize,
    pub precision: Precision,
}

impl Default for SemanticConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_DIMENSIONS,
            min_df: 2,
            max_df_fraction: 0.5,
            oversample: 10,
            power_iters: 2,
            precision: Precision::F64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub forest: ForestConfig,
    pub neg_ratio: f64,
    pub min_positives: usize,
    pub top_n: usize,
    pub holdout_fraction: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            forest: ForestConfig::default(),
            neg_ratio: 1.0,
            min_positives: DEFAULT_MIN_POSITIVES,
            top_n: 100_000,
            holdout_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynsetConfig {
    pub fields: Vec<String>,
    /// Maximum synset list length; unlimited when absent.
    pub limit: Option<usize>,
}

impl Default for SynsetConfig {
    fn default() -> Self {
        Self {
            fields: crate::synset::default_fields(),
            limit: None,
        }
    }
}

/// One or several list-size multipliers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Multipliers {
    One(u32),
    Many(Vec<u32>),
}

impl Multipliers {
    pub fn values(&self) -> Vec<u32> {
        let mut v = match self {
            Multipliers::One(a) => vec![*a],
            Multipliers::Many(v) => v.clone(),
        };
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionSettings {
    pub a: Multipliers,
    pub score_threshold: Option<f64>,
}

impl Default for FusionSettings {
    fn default() -> Self {
        Self {
            a: Multipliers::Many(vec![1, 2, 3, 4]),
            score_threshold: None,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config uses defaults")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Makes relative paths relative to `base` (normally the config file's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.paths.corpus,
            &mut self.paths.synsets,
            &mut self.paths.ground_truth,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.paths.output_dir);
    }

    /// Checks value ranges. Input files are checked by [`RunConfig::check_inputs`].
    pub fn validate(&self) -> Result<()> {
        let a = self.fusion.a.values();
        if a.is_empty() || a.contains(&0) {
            return Err(Error::Config("fusion.a must list integers >= 1".into()));
        }
        if self.semantic.k < 2 {
            return Err(Error::Config("semantic.k must be at least 2".into()));
        }
        if self.classifier.top_n == 0 {
            return Err(Error::Config("classifier.top_n must be at least 1".into()));
        }
        if self.synset.fields.is_empty() {
            return Err(Error::Config("synset.fields must not be empty".into()));
        }
        if let Some(t) = self.fusion.score_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Config(format!(
                    "fusion.score_threshold must lie in [0, 1], got {t}"
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for t in &self.topics {
            if crate::tokenize::word_vec(t).is_empty() {
                return Err(Error::Config(format!("topic {t:?} has no word characters")));
            }
            if !seen.insert(t.to_lowercase()) {
                return Err(Error::Config(format!("topic {t:?} is listed twice")));
            }
        }
        Ok(())
    }

    /// Every configured input file must exist and at least one topic must be set.
    pub fn check_inputs(&self) -> Result<()> {
        if self.topics.is_empty() {
            return Err(Error::Config("no topics configured".into()));
        }
        let required = [
            ("paths.corpus", &self.paths.corpus),
            ("paths.synsets", &self.paths.synsets),
        ];
        for (name, p) in required {
            match p {
                None => return Err(Error::Config(format!("{name} is not set"))),
                Some(p) if !p.is_file() => return Err(Error::Config(format!("{name} {} does not exist", p.display()))),
                _ => {}
            }
        }
        if let Some(p) = &self.paths.ground_truth {
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "paths.ground_truth {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_documented_values() {
        let c = RunConfig::default();
        assert_eq!(c.semantic.k, 150);
        assert_eq!(c.semantic.oversample, 10);
        assert_eq!(c.semantic.power_iters, 2);
        assert_eq!(c.classifier.top_n, 100_000);
        assert_eq!(c.classifier.min_positives, 100);
        assert_eq!(c.classifier.forest.n_trees, 100);
        assert_eq!(c.fusion.a.values(), [1, 2, 3, 4]);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn parses_toml_and_rejects_bad_values() {
        let c: RunConfig = toml::from_str(
            r#"
            seed = 9
            topics = ["Mycology", "Robotics"]
            [paths]
            corpus = "c.jsonl"
            synsets = "s.json"
            [fusion]
            a = 2
            [classifier.forest]
            n_trees = 10
            max_features = { count = 3 }
            "#,
        )
        .unwrap();
        assert_eq!(c.fusion.a.values(), [2]);
        assert_eq!(c.classifier.forest.n_trees, 10);
        assert!(c.validate().is_ok());

        let mut bad = c.clone();
        bad.fusion.a = Multipliers::One(0);
        assert!(bad.validate().is_err());
        let mut bad = c.clone();
        bad.semantic.k = 1;
        assert!(bad.validate().is_err());
        let mut bad = c.clone();
        bad.topics.push("mycology".into());
        assert!(bad.validate().is_err());
        assert!(toml::from_str::<RunConfig>("unknown = 1").is_err());
    }

    #[test]
    fn missing_inputs_are_reported() {
        let mut c = RunConfig::default();
        c.topics = vec!["T".into()];
        c.paths.corpus = Some("/does/not/exist.jsonl".into());
        c.paths.synsets = Some("/does/not/exist.json".into());
        let err = c.check_inputs().unwrap_err();
        assert!(err.to_string().contains("paths.corpus"));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
