//! Dense semantic feature space: TF-IDF over unigrams and bigrams, projected
//! with a randomized truncated SVD (latent semantic indexing).

mod embedding;
mod sparse;
mod svd;
mod vocab;

pub use embedding::{cosine, embedding_quality, EmbeddingHeader, QualityReport, SemanticMatrix};
pub use sparse::{CsrMatrix, LinearOperator};
pub use svd::{randomized_svd, truncated_svd, SvdParams, TruncatedSvd};
pub use vocab::{fit_vocabulary, ngrams, vectorize, TfIdfMatrix, Vocabulary};

/// Conventional semantic feature size.
pub const DEFAULT_DIMENSIONS: usize = 150;
/// Range of feature sizes that the semantic space is designed for.
pub const TYPICAL_DIMENSIONS: std::ops::RangeInclusive<usize> = 100..=600;
