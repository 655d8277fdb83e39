//! Embedding-endpoint scorer: batched vector fetch with disk caching, then
//! cosine similarity.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::cache::{DiskCache, EMB_NS};
use crate::endpoint::EmbeddingApi;
use crate::error::{AuditError, Result};

use super::{cosine, RelevanceScorer, ScorerKind};

/// A provider embedding. Entries are finite; the dimensionality is constant
/// per model within a run. Vectors are stored as returned (no normalization),
/// cosine handles scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Validate finiteness and non-emptiness of a provider vector.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(AuditError::Endpoint("empty embedding vector".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(AuditError::Endpoint(format!(
                "non-finite embedding component at position {pos}"
            )));
        }
        Ok(EmbeddingVector { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Batching and retry knobs for embedding fetches.
#[derive(Debug, Clone)]
pub struct EmbedOptions {
    /// Maximum concurrent endpoint requests.
    pub parallelism: usize,
    /// Texts per request.
    pub chunk_size: usize,
    /// Retries per chunk after the first attempt.
    pub max_retries: u32,
    /// Base backoff between transport retries (multiplied by attempt number).
    pub retry_backoff: Duration,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions {
            parallelism: 8,
            chunk_size: 64,
            max_retries: 3,
            retry_backoff: Duration::from_millis(200),
        }
    }
}

/// On-disk cache payload for one embedding.
#[derive(Serialize, Deserialize)]
struct CachedEmbedding {
    model: String,
    dim: usize,
    vector: Vec<f64>,
}

/// Embed `texts` (one vector each, input order), consulting the cache first.
///
/// Uncached texts are deduplicated, chunked, and fetched with at most
/// `options.parallelism` in-flight requests. Every fresh vector is validated
/// (finite, consistent dimensionality — violations name the offending input
/// index) and written back to the cache, so a rerun over the same texts
/// issues no endpoint requests.
pub fn embed_batch(
    texts: &[String],
    model_id: &str,
    api: &dyn EmbeddingApi,
    cache: &DiskCache,
    options: &EmbedOptions,
) -> Result<Vec<EmbeddingVector>> {
    if texts.is_empty() {
        return Err(AuditError::Invalid("embed_batch: no texts".into()));
    }
    let keys: Vec<String> =
        texts.iter().map(|t| DiskCache::embedding_key(model_id, t)).collect();

    let mut resolved: HashMap<&str, EmbeddingVector> = HashMap::new();
    let mut misses: Vec<&str> = Vec::new();
    for (text, key) in texts.iter().zip(&keys) {
        if resolved.contains_key(text.as_str()) || misses.contains(&text.as_str()) {
            continue;
        }
        match cache.get::<CachedEmbedding>(EMB_NS, key) {
            Some(hit) => {
                resolved.insert(text.as_str(), EmbeddingVector::new(hit.vector)?);
            }
            None => misses.push(text.as_str()),
        }
    }

    if !misses.is_empty() {
        let chunks: Vec<&[&str]> = misses.chunks(options.chunk_size.max(1)).collect();
        let results: Mutex<Vec<Option<Vec<Vec<f64>>>>> = Mutex::new(vec![None; chunks.len()]);
        let failure: Mutex<Option<AuditError>> = Mutex::new(None);
        let next = AtomicUsize::new(0);
        let workers = options.parallelism.max(1).min(chunks.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let idx = next.fetch_add(1, Ordering::SeqCst);
                    if idx >= chunks.len() {
                        break;
                    }
                    if failure.lock().expect("failure slot poisoned").is_some() {
                        break;
                    }
                    let inputs: Vec<String> =
                        chunks[idx].iter().map(|t| t.to_string()).collect();
                    match fetch_with_retries(api, model_id, &inputs, options) {
                        Ok(vectors) => {
                            results.lock().expect("results poisoned")[idx] = Some(vectors);
                        }
                        Err(err) => {
                            failure.lock().expect("failure slot poisoned").get_or_insert(err);
                            break;
                        }
                    }
                });
            }
        });
        if let Some(err) = failure.into_inner().expect("failure slot poisoned") {
            return Err(err);
        }
        let results = results.into_inner().expect("results poisoned");
        for (chunk, vectors) in chunks.iter().zip(results) {
            let vectors =
                vectors.ok_or_else(|| AuditError::Endpoint("embedding chunk not fetched".into()))?;
            if vectors.len() != chunk.len() {
                return Err(AuditError::Endpoint(format!(
                    "embeddings reply has {} vectors for {} inputs",
                    vectors.len(),
                    chunk.len()
                )));
            }
            for (text, vector) in chunk.iter().zip(vectors) {
                let embedding = EmbeddingVector::new(vector)?;
                let key = DiskCache::embedding_key(model_id, text);
                cache.put(
                    EMB_NS,
                    &key,
                    &CachedEmbedding {
                        model: model_id.to_string(),
                        dim: embedding.dim(),
                        vector: embedding.values().to_vec(),
                    },
                )?;
                resolved.insert(text, embedding);
            }
        }
    }

    let mut out = Vec::with_capacity(texts.len());
    let mut expected_dim: Option<(usize, usize)> = None;
    for (idx, text) in texts.iter().enumerate() {
        let embedding = resolved
            .get(text.as_str())
            .cloned()
            .ok_or_else(|| AuditError::Endpoint(format!("no embedding for input {idx}")))?;
        match expected_dim {
            None => expected_dim = Some((embedding.dim(), idx)),
            Some((dim, first)) if dim != embedding.dim() => {
                return Err(AuditError::Endpoint(format!(
                    "embedding dimension mismatch: input {idx} has dim {} but input {first} has dim {dim}",
                    embedding.dim()
                )));
            }
            _ => {}
        }
        out.push(embedding);
    }
    Ok(out)
}

fn fetch_with_retries(
    api: &dyn EmbeddingApi,
    model_id: &str,
    inputs: &[String],
    options: &EmbedOptions,
) -> Result<Vec<Vec<f64>>> {
    let attempts = options.max_retries as u64 + 1;
    let mut last_err = None;
    for attempt in 1..=attempts {
        match api.embed(model_id, inputs) {
            Ok(vectors) => return Ok(vectors),
            Err(err) => {
                last_err = Some(err);
                if attempt < attempts && !options.retry_backoff.is_zero() {
                    std::thread::sleep(options.retry_backoff * attempt as u32);
                }
            }
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// [`RelevanceScorer`] backed by an embeddings endpoint: candidates are
/// scored by the cosine of their embeddings with the query's.
pub struct EmbeddingScorer<'a> {
    model_id: String,
    summary: String,
    api: &'a dyn EmbeddingApi,
    cache: &'a DiskCache,
    options: EmbedOptions,
}

impl<'a> EmbeddingScorer<'a> {
    pub fn new(
        model_id: String,
        summary: String,
        api: &'a dyn EmbeddingApi,
        cache: &'a DiskCache,
        options: EmbedOptions,
    ) -> Self {
        EmbeddingScorer { model_id, summary, api, cache, options }
    }

    /// Warm the cache for `texts` in bulk. Scoring afterwards is pure cache
    /// reads, which keeps per-group score order deterministic.
    pub fn prewarm(&self, texts: &[String]) -> Result<()> {
        if texts.is_empty() {
            return Ok(());
        }
        embed_batch(texts, &self.model_id, self.api, self.cache, &self.options)?;
        Ok(())
    }
}

impl RelevanceScorer for EmbeddingScorer<'_> {
    fn score_relevance(&self, query: &str, candidates: &[&str]) -> Result<Vec<f64>> {
        if candidates.is_empty() {
            return Err(AuditError::Invalid("score_relevance: no candidates".into()));
        }
        let mut texts = Vec::with_capacity(candidates.len() + 1);
        texts.push(query.to_string());
        texts.extend(candidates.iter().map(|c| c.to_string()));
        let vectors = embed_batch(&texts, &self.model_id, self.api, self.cache, &self.options)?;
        let (query_vec, candidate_vecs) = vectors.split_first().expect("non-empty batch");
        candidate_vecs
            .iter()
            .map(|vec| cosine(query_vec.values(), vec.values()))
            .collect()
    }

    fn summary(&self) -> String {
        self.summary.clone()
    }

    fn kind(&self) -> ScorerKind {
        ScorerKind::Embedding
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    /// Deterministic fake endpoint: counts requests, derives a vector from
    /// the text bytes.
    struct CountingApi {
        requests: AtomicUsize,
        dim_for: fn(&str) -> usize,
    }

    impl CountingApi {
        fn new() -> Self {
            CountingApi { requests: AtomicUsize::new(0), dim_for: |_| 4 }
        }

        fn count(&self) -> usize {
            self.requests.load(Ordering::SeqCst)
        }
    }

    fn vector_for(text: &str, dim: usize) -> Vec<f64> {
        (0..dim)
            .map(|i| {
                let byte = text.as_bytes().get(i % text.len().max(1)).copied().unwrap_or(7);
                f64::from(byte) + i as f64 + 1.0
            })
            .collect()
    }

    impl EmbeddingApi for CountingApi {
        fn embed(&self, _model: &str, inputs: &[String]) -> Result<Vec<Vec<f64>>> {
            self.requests.fetch_add(1, Ordering::SeqCst);
            Ok(inputs.iter().map(|t| vector_for(t, (self.dim_for)(t))).collect())
        }
    }

    fn options() -> EmbedOptions {
        EmbedOptions { retry_backoff: Duration::ZERO, ..EmbedOptions::default() }
    }

    #[test]
    fn identical_texts_identical_vectors() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path());
        let api = CountingApi::new();
        let texts = vec!["same text".to_string(), "same text".to_string()];
        let out = embed_batch(&texts, "m", &api, &cache, &options()).unwrap();
        assert_eq!(out[0], out[1]);
        assert_eq!(api.count(), 1);
    }

    #[test]
    fn rerun_hits_cache_only() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path());
        let api = CountingApi::new();
        let texts: Vec<String> = (0..10).map(|i| format!("text {i}")).collect();
        let first = embed_batch(&texts, "m", &api, &cache, &options()).unwrap();
        let calls_after_first = api.count();
        assert!(calls_after_first >= 1);
        let second = embed_batch(&texts, "m", &api, &cache, &options()).unwrap();
        assert_eq!(api.count(), calls_after_first, "warm rerun must not hit the endpoint");
        assert_eq!(first, second);
    }

    #[test]
    fn cache_is_model_scoped() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path());
        let api = CountingApi::new();
        let texts = vec!["shared".to_string()];
        embed_batch(&texts, "model-a", &api, &cache, &options()).unwrap();
        embed_batch(&texts, "model-b", &api, &cache, &options()).unwrap();
        assert_eq!(api.count(), 2);
    }

    #[test]
    fn mismatched_dims_name_the_index() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path());
        let api = CountingApi {
            requests: AtomicUsize::new(0),
            dim_for: |text| if text.contains("wide") { 6 } else { 4 },
        };
        let texts = vec!["normal".to_string(), "wide one".to_string()];
        let err = embed_batch(&texts, "m", &api, &cache, &options()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("dimension mismatch"), "{msg}");
        assert!(msg.contains("input 1"), "{msg}");
    }

    #[test]
    fn non_finite_reply_rejected() {
        struct NanApi;
        impl EmbeddingApi for NanApi {
            fn embed(&self, _model: &str, inputs: &[String]) -> Result<Vec<Vec<f64>>> {
                Ok(inputs.iter().map(|_| vec![1.0, f64::NAN]).collect())
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path());
        let err =
            embed_batch(&["t".to_string()], "m", &NanApi, &cache, &options()).unwrap_err();
        assert!(err.to_string().contains("non-finite"), "{err}");
    }

    #[test]
    fn transport_errors_retried_then_surface() {
        struct FlakyApi {
            calls: AtomicUsize,
            fail_first: usize,
        }
        impl EmbeddingApi for FlakyApi {
            fn embed(&self, _model: &str, inputs: &[String]) -> Result<Vec<Vec<f64>>> {
                let n = self.calls.fetch_add(1, Ordering::SeqCst);
                if n < self.fail_first {
                    return Err(AuditError::Endpoint("503".into()));
                }
                Ok(inputs.iter().map(|t| vector_for(t, 4)).collect())
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path());

        let api = FlakyApi { calls: AtomicUsize::new(0), fail_first: 2 };
        let out = embed_batch(&["t".to_string()], "m", &api, &cache, &options());
        assert!(out.is_ok(), "2 failures then success fits within 3 retries");

        let api = FlakyApi { calls: AtomicUsize::new(0), fail_first: 99 };
        let err =
            embed_batch(&["u".to_string()], "m", &api, &cache, &options()).unwrap_err();
        assert!(matches!(err, AuditError::Endpoint(_)));
        assert_eq!(api.calls.load(Ordering::SeqCst), 4, "1 attempt + 3 retries");
    }

    #[test]
    fn scorer_ranks_identical_candidate_highest() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path());
        let api = CountingApi::new();
        let scorer =
            EmbeddingScorer::new("m".into(), "embedding:m".into(), &api, &cache, options());
        let scores = scorer
            .score_relevance("the query", &["other text", "the query", "also different"])
            .unwrap();
        let best = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(best, 1);
        assert!((scores[1] - 1.0).abs() < 1e-12);
    }
}
