//! Relevance scorers behind one interface.
//!
//! Three kinds are supported:
//!
//! * `embedding` — cosine similarity of vectors fetched from an
//!   OpenAI-compatible embeddings endpoint (cached on disk);
//! * `bm25` — a native lexical scorer whose corpus statistics come from the
//!   run's full candidate pool;
//! * `mock` — a deterministic offline scorer for tests and golden runs.

pub mod bm25;
pub mod embedding;
pub mod mock;

use std::fmt;

use crate::cache::DiskCache;
use crate::endpoint::EmbeddingApi;
use crate::error::{AuditError, Result};

pub use bm25::{Bm25Index, Bm25Params, Bm25Scorer};
pub use embedding::{embed_batch, EmbedOptions, EmbeddingScorer, EmbeddingVector};
pub use mock::{BumpTarget, MockScorer, MockSpec};

/// Scorer kind, used where a kind must be checked without downcasting
/// (answer-correctness scoring rejects `bm25`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScorerKind {
    Embedding,
    Bm25,
    Mock,
}

/// A relevance scorer: assigns one similarity score per candidate for a
/// query. Higher means more relevant. Implementations are pure given their
/// configuration and (for embedding scorers) a warm cache.
pub trait RelevanceScorer: Sync {
    /// Score every candidate against `query`, in candidate order.
    fn score_relevance(&self, query: &str, candidates: &[&str]) -> Result<Vec<f64>>;

    /// Stable one-line description embedded in reports.
    fn summary(&self) -> String;

    fn kind(&self) -> ScorerKind;
}

/// Parsed scorer specification.
///
/// Text grammar (the CLI `--scorer` argument):
///
/// * `embedding:<model_id>@<base_url>` or `embedding:<model_id>` (base URL
///   supplied separately);
/// * `bm25` or `bm25:k1=<v>,b=<v>`;
/// * `mock:<spec>` with `<spec>` one of `position` or `hash`, optionally
///   followed by `+bump=<style_tag|query>:<delta>` (see [`MockSpec`]).
#[derive(Debug, Clone, PartialEq)]
pub enum ScorerDescriptor {
    Embedding {
        model_id: String,
        base_url: Option<String>,
    },
    Bm25(Bm25Params),
    Mock(MockSpec),
}

impl ScorerDescriptor {
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Some(rest) = spec.strip_prefix("embedding:") {
            let (model_id, base_url) = match rest.split_once('@') {
                Some((model, url)) => (model, Some(url.to_string())),
                None => (rest, None),
            };
            if model_id.is_empty() {
                return Err(AuditError::Config(format!(
                    "scorer spec {spec:?}: empty model id"
                )));
            }
            return Ok(ScorerDescriptor::Embedding {
                model_id: model_id.to_string(),
                base_url,
            });
        }
        if spec == "bm25" {
            return Ok(ScorerDescriptor::Bm25(Bm25Params::default()));
        }
        if let Some(rest) = spec.strip_prefix("bm25:") {
            return Ok(ScorerDescriptor::Bm25(Bm25Params::parse(rest)?));
        }
        if let Some(rest) = spec.strip_prefix("mock:") {
            return Ok(ScorerDescriptor::Mock(MockSpec::parse(rest)?));
        }
        Err(AuditError::Config(format!(
            "unrecognized scorer spec {spec:?}; expected embedding:<model>[@url], bm25[:k1=..,b=..], or mock:<spec>"
        )))
    }

    pub fn kind(&self) -> ScorerKind {
        match self {
            ScorerDescriptor::Embedding { .. } => ScorerKind::Embedding,
            ScorerDescriptor::Bm25(_) => ScorerKind::Bm25,
            ScorerDescriptor::Mock(_) => ScorerKind::Mock,
        }
    }
}

impl fmt::Display for ScorerDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScorerDescriptor::Embedding { model_id, base_url } => match base_url {
                Some(url) => write!(f, "embedding:{model_id}@{url}"),
                None => write!(f, "embedding:{model_id}"),
            },
            ScorerDescriptor::Bm25(params) => write!(f, "bm25:k1={},b={}", params.k1, params.b),
            ScorerDescriptor::Mock(spec) => write!(f, "mock:{spec}"),
        }
    }
}

/// Instantiate a scorer for one audit run.
///
/// `pool` is the run's full candidate pool (every document variant of every
/// group); BM25 corpus statistics are computed over it. Embedding scorers
/// need the endpoint API and the shared cache.
pub fn build_scorer<'a>(
    descriptor: &ScorerDescriptor,
    pool: &[String],
    api: Option<&'a dyn EmbeddingApi>,
    cache: Option<&'a DiskCache>,
    options: EmbedOptions,
) -> Result<Box<dyn RelevanceScorer + 'a>> {
    match descriptor {
        ScorerDescriptor::Embedding { model_id, base_url: _ } => {
            let api = api.ok_or_else(|| {
                AuditError::Config(format!(
                    "scorer {descriptor} needs an embedding endpoint (base URL)"
                ))
            })?;
            let cache = cache.ok_or_else(|| {
                AuditError::Config(format!("scorer {descriptor} needs a cache directory"))
            })?;
            Ok(Box::new(EmbeddingScorer::new(
                model_id.clone(),
                descriptor.to_string(),
                api,
                cache,
                options,
            )))
        }
        ScorerDescriptor::Bm25(params) => {
            let index = Bm25Index::build(pool, *params)?;
            Ok(Box::new(Bm25Scorer::new(index)))
        }
        ScorerDescriptor::Mock(spec) => Ok(Box::new(MockScorer::new(spec.clone()))),
    }
}

/// Cosine similarity of two equal-dimension vectors, clamped to `[-1, 1]`
/// against rounding. Errors on dimension mismatch or a zero-norm input.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(AuditError::Invalid(format!(
            "cosine dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let mut dot = 0.0;
    let mut norm_u = 0.0;
    let mut norm_v = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        norm_u += a * a;
        norm_v += b * b;
    }
    if norm_u == 0.0 || norm_v == 0.0 {
        return Err(AuditError::Invalid("cosine of a zero-norm vector".into()));
    }
    Ok((dot / (norm_u.sqrt() * norm_v.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn cosine_hand_cases() {
        assert_abs_diff_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        // 1/sqrt(2)
        assert_abs_diff_eq!(
            cosine(&[1.0, 0.0], &[1.0, 1.0]).unwrap(),
            0.70710678,
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(cosine(&[1.0, 2.0], &[-1.0, -2.0]).unwrap(), -1.0);
    }

    #[test]
    fn cosine_rejects_mismatch_and_zero() {
        assert!(cosine(&[1.0], &[1.0, 2.0]).is_err());
        assert!(cosine(&[0.0, 0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn descriptor_grammar_round_trips() {
        let cases = [
            "embedding:text-embedding-3-small@http://localhost:8080",
            "embedding:bge-large-en-v1.5",
            "bm25:k1=1.5,b=0.75",
            "mock:position",
            "mock:hash+bump=style_3:2",
            "mock:hash+bump=query:1.5",
        ];
        for case in cases {
            let parsed = ScorerDescriptor::parse(case).unwrap();
            let rendered = parsed.to_string();
            assert_eq!(ScorerDescriptor::parse(&rendered).unwrap(), parsed, "{case}");
        }
        assert_eq!(
            ScorerDescriptor::parse("bm25").unwrap(),
            ScorerDescriptor::Bm25(Bm25Params::default())
        );
        assert!(ScorerDescriptor::parse("tfidf:whatever").is_err());
        assert!(ScorerDescriptor::parse("embedding:").is_err());
        assert!(ScorerDescriptor::parse("bm25:k1=0,b=0.5").is_err());
        assert!(ScorerDescriptor::parse("bm25:k1=1.2,b=1.5").is_err());
    }

    proptest! {
        // Symmetry and positive scale invariance on nondegenerate vectors.
        #[test]
        fn cosine_symmetric_and_scale_invariant(
            pairs in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..8),
            alpha in 0.01f64..100.0,
        ) {
            let u: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let v: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(u.iter().any(|x| x.abs() > 1e-9));
            prop_assume!(v.iter().any(|x| x.abs() > 1e-9));
            let ab = cosine(&u, &v).unwrap();
            let ba = cosine(&v, &u).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&ab));
            let scaled: Vec<f64> = u.iter().map(|x| x * alpha).collect();
            let scaled_sim = cosine(&scaled, &v).unwrap();
            prop_assert!((ab - scaled_sim).abs() < 1e-9);
        }

        // cosine = 1 iff positive scalar multiples.
        #[test]
        fn cosine_self_is_one(values in proptest::collection::vec(-50.0f64..50.0, 1..8), alpha in 0.01f64..10.0) {
            prop_assume!(values.iter().any(|x| x.abs() > 1e-6));
            let scaled: Vec<f64> = values.iter().map(|x| x * alpha).collect();
            let sim = cosine(&values, &scaled).unwrap();
            prop_assert!((sim - 1.0).abs() < 1e-9);
        }
    }
}
