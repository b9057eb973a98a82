//! Subject tagging for article metadata: a synonym-set keyword search fused
//! with a per-topic random-forest classifier over a latent semantic space.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); metrics
//! accept any numeric type, including exact rationals. The aliases below fix
//! the common choices.

pub mod benchmark;
pub mod classifier;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod index;
pub mod pipeline;
pub mod ranked;
pub mod scalar;
pub mod seed;
pub mod semantic;
pub mod synset;
pub mod tokenize;

pub use corpus::{ingest_corpus, ArticleRecord, Corpus, GroundTruth};
pub use error::{Error, Result};
pub use fusion::{fuse, invert, FusionConfig, Tag, TagAssignment};
pub use index::Index;
pub use pipeline::{Overrides, Pipeline, RunConfig};
pub use ranked::{Origin, RankedEntry, RankedList};
pub use scalar::Scalar;
pub use synset::Synset;

pub type SemanticMatrix32 = semantic::SemanticMatrix<f32>;
pub type SemanticMatrix64 = semantic::SemanticMatrix<f64>;
pub type TopicModel32 = classifier::TopicModel<f32>;
pub type TopicModel64 = classifier::TopicModel<f64>;
pub type RandomForest64 = classifier::RandomForest<f64>;
pub type EvalReport = evaluation::EvalReport<f64>;
