//! Expert-reviewer identification framed as information retrieval.
//!
//! Each proposal is a query and the reviewer pool is the collection. The crate
//! builds expertise representations (ranked keywords, TF-IDF, LDA topics,
//! pooled encoder embeddings, LLM judgements), turns each into a
//! proposals × reviewers [`ExpertiseMatrix`], and scores the matrices against
//! the proposal-designated reviewer and self-reported expertise labels.

pub mod ablation;
pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod keyword;
pub mod lda;
pub mod llm;
pub mod pipeline;
pub mod report;
pub mod similarity;
pub mod stats;
pub mod synth;
pub mod text;
pub mod tfidf;

use sha2::{Digest, Sha256};

pub use corpus::{load_corpus, Corpus, QueryConfig};
pub use error::{Error, Result};
pub use similarity::{ExpertiseMatrix, Method};

/// Child seed for a named sub-task, stable across runs and platforms.
pub fn derive_seed(seed: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
