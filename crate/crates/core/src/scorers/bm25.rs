//! Native BM25 lexical scorer.
//!
//! Variant: Lucene-style idf with a `+1` inside the logarithm, which keeps
//! scores non-negative even for terms appearing in most documents:
//!
//! ```text
//! idf(t)        = ln(1 + (N - df(t) + 0.5) / (df(t) + 0.5))
//! score(q, D)   = Σ_{t ∈ query tokens} idf(t) · tf(t, D)·(k1 + 1)
//!                 / (tf(t, D) + k1·(1 - b + b·|D|/avgdl))
//! ```
//!
//! Each query token occurrence contributes one summand (repeated query terms
//! count each time). Tokenization is the shared [`crate::tokenize`] rule set.
//! Defaults `k1 = 1.5`, `b = 0.75`.

use std::collections::HashMap;

use crate::error::{AuditError, Result};
use crate::tokenize::tokenize;

use super::{RelevanceScorer, ScorerKind};

/// BM25 free parameters. `k1 > 0`, `0 ≤ b ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.5, b: 0.75 }
    }
}

impl Bm25Params {
    /// Parse `"k1=<v>,b=<v>"` (either key optional, defaults fill the rest).
    pub fn parse(spec: &str) -> Result<Self> {
        let mut params = Bm25Params::default();
        for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                AuditError::Config(format!("bm25 parameter {part:?} is not key=value"))
            })?;
            let value: f64 = value.trim().parse().map_err(|_| {
                AuditError::Config(format!("bm25 parameter {part:?}: invalid number"))
            })?;
            match key.trim() {
                "k1" => params.k1 = value,
                "b" => params.b = value,
                other => {
                    return Err(AuditError::Config(format!("unknown bm25 parameter {other:?}")))
                }
            }
        }
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0) {
            return Err(AuditError::Config(format!("bm25 k1 must be > 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(AuditError::Config(format!("bm25 b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

/// Immutable corpus statistics for BM25 scoring.
#[derive(Debug, Clone)]
pub struct Bm25Index {
    params: Bm25Params,
    doc_term_freqs: Vec<HashMap<String, usize>>,
    doc_lengths: Vec<usize>,
    doc_freq: HashMap<String, usize>,
    avg_doc_length: f64,
    n_docs: usize,
}

impl Bm25Index {
    /// Index the supplied documents (multiset semantics: duplicates count).
    ///
    /// Errors on an empty list or when every document tokenizes to nothing.
    pub fn build<S: AsRef<str>>(documents: &[S], params: Bm25Params) -> Result<Self> {
        params.validate()?;
        if documents.is_empty() {
            return Err(AuditError::Invalid("bm25: no documents to index".into()));
        }
        let mut doc_term_freqs = Vec::with_capacity(documents.len());
        let mut doc_lengths = Vec::with_capacity(documents.len());
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        for doc in documents {
            let tokens = tokenize(doc.as_ref());
            doc_lengths.push(tokens.len());
            let mut freqs: HashMap<String, usize> = HashMap::new();
            for token in tokens {
                *freqs.entry(token).or_insert(0) += 1;
            }
            for term in freqs.keys() {
                *doc_freq.entry(term.clone()).or_insert(0) += 1;
            }
            doc_term_freqs.push(freqs);
        }
        let total: usize = doc_lengths.iter().sum();
        if total == 0 {
            return Err(AuditError::Invalid("bm25: all documents are empty".into()));
        }
        let avg_doc_length = total as f64 / documents.len() as f64;
        Ok(Bm25Index {
            params,
            doc_term_freqs,
            doc_lengths,
            doc_freq,
            avg_doc_length,
            n_docs: documents.len(),
        })
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    /// Document frequency of a term.
    pub fn doc_freq(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    fn idf(&self, term: &str) -> f64 {
        let df = self.doc_freq(term) as f64;
        let n = self.n_docs as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Score an indexed document against a query.
    pub fn score(&self, query: &str, doc_id: usize) -> Result<f64> {
        if doc_id >= self.n_docs {
            return Err(AuditError::Invalid(format!(
                "bm25 doc_id {doc_id} out of range (corpus has {} documents)",
                self.n_docs
            )));
        }
        Ok(self.score_tokens(query, &self.doc_term_freqs[doc_id], self.doc_lengths[doc_id]))
    }

    /// Score an arbitrary text against the index's corpus statistics.
    ///
    /// For texts that are members of the indexed pool this equals
    /// [`Bm25Index::score`]; it stays well-defined for any candidate.
    pub fn score_text(&self, query: &str, doc_text: &str) -> f64 {
        let tokens = tokenize(doc_text);
        let length = tokens.len();
        let mut freqs: HashMap<String, usize> = HashMap::new();
        for token in tokens {
            *freqs.entry(token).or_insert(0) += 1;
        }
        self.score_tokens(query, &freqs, length)
    }

    fn score_tokens(&self, query: &str, freqs: &HashMap<String, usize>, doc_len: usize) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let mut score = 0.0;
        for term in tokenize(query) {
            let tf = freqs.get(&term).copied().unwrap_or(0) as f64;
            if tf == 0.0 {
                continue;
            }
            let norm = k1 * (1.0 - b + b * doc_len as f64 / self.avg_doc_length);
            score += self.idf(&term) * tf * (k1 + 1.0) / (tf + norm);
        }
        score
    }
}

/// [`RelevanceScorer`] wrapper around a built index.
pub struct Bm25Scorer {
    index: Bm25Index,
}

impl Bm25Scorer {
    pub fn new(index: Bm25Index) -> Self {
        Bm25Scorer { index }
    }

    pub fn index(&self) -> &Bm25Index {
        &self.index
    }
}

impl RelevanceScorer for Bm25Scorer {
    fn score_relevance(&self, query: &str, candidates: &[&str]) -> Result<Vec<f64>> {
        if candidates.is_empty() {
            return Err(AuditError::Invalid("score_relevance: no candidates".into()));
        }
        Ok(candidates
            .iter()
            .map(|candidate| self.index.score_text(query, candidate))
            .collect())
    }

    fn summary(&self) -> String {
        let params = self.index.params();
        format!("bm25:k1={},b={}", params.k1, params.b)
    }

    fn kind(&self) -> ScorerKind {
        ScorerKind::Bm25
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_doc_statistics() {
        let index = Bm25Index::build(&["cat sat", "dog ran"], Bm25Params::default()).unwrap();
        assert_eq!(index.n_docs(), 2);
        assert_abs_diff_eq!(index.avg_doc_length(), 2.0);
        assert_eq!(index.doc_freq("cat"), 1);
        assert_eq!(index.doc_freq("zebra"), 0);
    }

    #[test]
    fn single_doc_statistics() {
        let index = Bm25Index::build(&["a b c"], Bm25Params::default()).unwrap();
        assert_eq!(index.n_docs(), 1);
        assert_abs_diff_eq!(index.avg_doc_length(), 3.0);
    }

    #[test]
    fn duplicates_count_twice() {
        let index = Bm25Index::build(&["cat", "cat"], Bm25Params::default()).unwrap();
        assert_eq!(index.n_docs(), 2);
        assert_eq!(index.doc_freq("cat"), 2);
    }

    // With |D| = avgdl the tf normalizer cancels to (tf + k1), so the score
    // of a unique single-occurrence term reduces to the idf alone:
    // idf = ln(1 + (2 - 1 + 0.5) / 1.5) = ln(2).
    #[test]
    fn ln2_hand_case() {
        let index =
            Bm25Index::build(&["cat sat", "dog ran"], Bm25Params { k1: 1.5, b: 0.75 }).unwrap();
        let score = index.score("cat", 0).unwrap();
        assert_abs_diff_eq!(score, std::f64::consts::LN_2, epsilon = 1e-6);
    }

    #[test]
    fn no_overlap_scores_zero() {
        let index = Bm25Index::build(&["cat sat", "dog ran"], Bm25Params::default()).unwrap();
        assert_eq!(index.score("zebra", 0).unwrap(), 0.0);
        assert_eq!(index.score("zebra", 1).unwrap(), 0.0);
    }

    #[test]
    fn full_match_dominates() {
        let index = Bm25Index::build(&["dog ran", "cat sat"], Bm25Params::default()).unwrap();
        let on_match = index.score("dog ran", 0).unwrap();
        let on_other = index.score("dog ran", 1).unwrap();
        assert!(on_match > on_other);
    }

    #[test]
    fn invalid_doc_id_and_empty_corpus() {
        let index = Bm25Index::build(&["cat"], Bm25Params::default()).unwrap();
        assert!(index.score("cat", 1).is_err());
        assert!(Bm25Index::build(&[] as &[&str], Bm25Params::default()).is_err());
        assert!(Bm25Index::build(&["...", "!!"], Bm25Params::default()).is_err());
    }

    #[test]
    fn score_text_agrees_with_indexed_score() {
        let docs = ["cat sat on the mat", "dog ran far", "cat cat cat"];
        let index = Bm25Index::build(&docs, Bm25Params::default()).unwrap();
        for (doc_id, doc) in docs.iter().enumerate() {
            for query in ["cat", "cat sat", "dog far", "the mat cat"] {
                let by_id = index.score(query, doc_id).unwrap();
                let by_text = index.score_text(query, doc);
                assert_abs_diff_eq!(by_id, by_text, epsilon = 1e-12);
            }
        }
    }

    // tf monotonicity: more occurrences of a query term never lower the
    // score, all else fixed (same document length).
    #[test]
    fn tf_monotonicity() {
        let docs = ["cat pad pad pad", "cat cat pad pad", "cat cat cat pad"];
        let index = Bm25Index::build(&docs, Bm25Params::default()).unwrap();
        let scores: Vec<f64> =
            (0..3).map(|id| index.score("cat", id).unwrap()).collect();
        assert!(scores[0] < scores[1] && scores[1] < scores[2], "{scores:?}");
    }

    #[test]
    fn repeated_query_tokens_accumulate() {
        let index = Bm25Index::build(&["cat sat", "dog ran"], Bm25Params::default()).unwrap();
        let once = index.score("cat", 0).unwrap();
        let twice = index.score("cat cat", 0).unwrap();
        assert_abs_diff_eq!(twice, 2.0 * once, epsilon = 1e-12);
    }
}
