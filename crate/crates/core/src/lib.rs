//! Rank-based audits of writing-style bias in embedding retrieval systems.
//!
//! The library measures whether a relevance scorer (an embedding model behind
//! an OpenAI-compatible endpoint, BM25, or a deterministic mock) systematically
//! prefers particular writing styles. An audit corpus pairs each query with ten
//! semantically equivalent documents: the original text plus nine stylistic
//! rewrites. For every group the candidates are ranked by relevance to the
//! query, the per-style ranks are averaged across the corpus, and the spread of
//! those averages is condensed into a single unfairness score:
//!
//! ```text
//! unfairness = (max(mean ranks) - min(mean ranks)) * std(mean ranks)
//! ```
//!
//! with the population standard deviation and fractional (mean) ranks for
//! ties. A fair scorer ranks every style about the same and scores near zero.
//!
//! Module map:
//!
//! * [`corpus`] — styled retrieval groups and annotated QA records (JSONL).
//! * [`stylegen`] — produce the nine rewrites via a chat-completion endpoint.
//! * [`scorers`] — embedding-cosine, BM25, and mock relevance scorers.
//! * [`textstats`] — token length, Bleu, Meteor, and RougeL descriptive stats.
//! * [`rankeval`] — the rank/average/unfairness pipeline and query-style sweep.
//! * [`answereval`] — answer-correctness scoring of QA systems and its
//!   unfairness.
//! * [`cache`] — the shared on-disk generation/embedding cache.
//! * [`endpoint`] — OpenAI-compatible chat and embeddings clients.

pub mod answereval;
pub mod cache;
pub mod corpus;
pub mod endpoint;
pub mod error;
pub mod rankeval;
pub mod scorers;
pub mod stylegen;
pub mod textstats;
pub mod tokenize;

pub use answereval::SystemCorrectness;
pub use cache::DiskCache;
pub use corpus::{AuditGroup, QARecord, SourcePair, StyleId, SystemAnswer};
pub use error::{AuditError, Result};
pub use rankeval::{AvgRankVector, QueryStyleMatrix, RankVector, UnfairnessReport};
pub use scorers::{Bm25Params, EmbeddingVector, MockSpec, RelevanceScorer, ScorerDescriptor};
pub use stylegen::{GenerationConfig, StylePrompt};
