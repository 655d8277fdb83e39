//! The audit core: rank style variants by relevance, average the ranks
//! across the corpus, and condense the spread into an unfairness score.
//!
//! Per group, the ten document variants are scored against one query variant
//! and ranked: highest similarity gets rank 1, ties receive fractional (mean)
//! ranks so the result is independent of candidate enumeration order. Ranks
//! are averaged entrywise over the corpus and
//!
//! ```text
//! unfairness = (max(mean ranks) - min(mean ranks)) * std(mean ranks)
//! ```
//!
//! with the population standard deviation (divisor = number of styles; the
//! ten styles are the entire population of interest). Both conventions are
//! embedded in every serialized report.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::{AuditGroup, StyleId};
use crate::error::{AuditError, Result};
use crate::scorers::RelevanceScorer;

/// Tie-handling convention stamped into reports.
pub const TIE_RULE: &str = "fractional";
/// Standard-deviation convention stamped into reports.
pub const STD_CONVENTION: &str = "population";

/// Fractional ranks of `similarities`, descending: the largest value gets
/// rank 1; tied values share the mean of the positions they span. The rank
/// sum is always `n(n+1)/2`. Errors on non-finite input.
pub fn fractional_ranks(similarities: &[f64]) -> Result<Vec<f64>> {
    if let Some(pos) = similarities.iter().position(|s| !s.is_finite()) {
        return Err(AuditError::Invalid(format!(
            "non-finite similarity at position {pos}"
        )));
    }
    let n = similarities.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Descending by similarity; values are finite so the comparison is total.
    order.sort_by(|&a, &b| similarities[b].partial_cmp(&similarities[a]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && similarities[order[end]] == similarities[order[start]] {
            end += 1;
        }
        // Positions start..end (0-based) share the mean of ranks
        // start+1 ..= end.
        let mean_rank = (start + 1 + end) as f64 / 2.0;
        for &index in &order[start..end] {
            ranks[index] = mean_rank;
        }
        start = end;
    }
    Ok(ranks)
}

/// Ranks of the ten style variants for one group under one query style.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector {
    pub ranks: BTreeMap<StyleId, f64>,
}

impl RankVector {
    /// Rank a full set of per-style similarities.
    pub fn from_similarities(similarities: &BTreeMap<StyleId, f64>) -> Result<Self> {
        if similarities.len() != StyleId::ALL.len() {
            return Err(AuditError::Invalid(format!(
                "rank vector needs all {} styles, got {}",
                StyleId::ALL.len(),
                similarities.len()
            )));
        }
        let values: Vec<f64> = StyleId::ALL.iter().map(|s| similarities[s]).collect();
        let ranks = fractional_ranks(&values)?;
        Ok(RankVector {
            ranks: StyleId::ALL.iter().copied().zip(ranks).collect(),
        })
    }

    /// Sum of all ranks; always `55` for ten styles, ties included.
    pub fn rank_sum(&self) -> f64 {
        self.ranks.values().sum()
    }
}

/// Entrywise mean of rank vectors over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvgRankVector {
    pub mean_ranks: BTreeMap<StyleId, f64>,
    pub n_groups: usize,
}

impl AvgRankVector {
    /// Unfairness of this vector: `(max - min) * population std`.
    pub fn unfairness(&self) -> f64 {
        let values: Vec<f64> = self.mean_ranks.values().copied().collect();
        unfairness(&values)
    }
}

/// Entrywise arithmetic mean of `rank_vectors`. Errors on an empty list.
pub fn average_ranks(rank_vectors: &[RankVector]) -> Result<AvgRankVector> {
    if rank_vectors.is_empty() {
        return Err(AuditError::Invalid("average_ranks: no rank vectors".into()));
    }
    let mut sums: BTreeMap<StyleId, f64> =
        StyleId::ALL.iter().map(|s| (*s, 0.0)).collect();
    for vector in rank_vectors {
        for style in StyleId::ALL {
            let rank = vector.ranks.get(&style).copied().ok_or_else(|| {
                AuditError::Invalid(format!("rank vector missing style {style}"))
            })?;
            *sums.get_mut(&style).unwrap() += rank;
        }
    }
    let n = rank_vectors.len();
    for sum in sums.values_mut() {
        *sum /= n as f64;
    }
    Ok(AvgRankVector { mean_ranks: sums, n_groups: n })
}

/// `(max - min) * population std` of `values`; zero for constant or empty
/// input. This is the bias score: larger means a stronger style preference.
pub fn unfairness(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    (max - min) * population_std(values)
}

/// Standard deviation with divisor `n`.
pub fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    variance.sqrt()
}

/// Outcome of one document-style audit: the average rank of every style and
/// the unfairness score, for one scorer under one query style.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfairnessReport {
    pub scorer: String,
    pub query_style: StyleId,
    pub avg_ranks: AvgRankVector,
    pub unfairness: f64,
    pub n_groups: usize,
}

/// Serialized form of an [`UnfairnessReport`] (the report wire format).
#[derive(Debug, Clone, Serialize)]
pub struct ReportRecord {
    pub scorer: String,
    pub query_style: String,
    pub n_groups: usize,
    pub avg_ranks: BTreeMap<StyleId, f64>,
    pub unfairness: f64,
    pub std_convention: &'static str,
    pub tie_rule: &'static str,
}

impl UnfairnessReport {
    pub fn to_record(&self) -> ReportRecord {
        ReportRecord {
            scorer: self.scorer.clone(),
            query_style: self.query_style.to_string(),
            n_groups: self.n_groups,
            avg_ranks: self.avg_ranks.mean_ranks.clone(),
            unfairness: self.unfairness,
            std_convention: STD_CONVENTION,
            tie_rule: TIE_RULE,
        }
    }
}

/// One unfairness report per query style, plus the mean and population std
/// of the ten scores.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryStyleMatrix {
    pub scorer: String,
    pub rows: BTreeMap<StyleId, UnfairnessReport>,
    pub avg: f64,
    pub std: f64,
}

/// Serialized form of a [`QueryStyleMatrix`].
#[derive(Debug, Clone, Serialize)]
pub struct MatrixRecord {
    pub scorer: String,
    pub rows: BTreeMap<StyleId, ReportRecord>,
    pub avg: f64,
    pub std: f64,
}

impl QueryStyleMatrix {
    pub fn to_record(&self) -> MatrixRecord {
        MatrixRecord {
            scorer: self.scorer.clone(),
            rows: self.rows.iter().map(|(style, report)| (*style, report.to_record())).collect(),
            avg: self.avg,
            std: self.std,
        }
    }
}

/// Audit document styles: score the chosen query variant of every group
/// against its ten document variants, rank, average, and report.
///
/// Groups must be complete on the document side, and on the query side too
/// when `query_style` is not `original`. Deterministic given a pure scorer
/// or a warm cache: groups are processed in input order and reduced
/// sequentially.
pub fn audit_document_styles(
    groups: &[AuditGroup],
    scorer: &dyn RelevanceScorer,
    query_style: StyleId,
) -> Result<UnfairnessReport> {
    if groups.is_empty() {
        return Err(AuditError::Invalid("audit_document_styles: empty corpus".into()));
    }
    let mut rank_vectors = Vec::with_capacity(groups.len());
    for group in groups {
        let query = group.query_variants.get(&query_style).ok_or_else(|| {
            AuditError::Invalid(format!(
                "group {:?} has no query variant {query_style}",
                group.group_id
            ))
        })?;
        let candidates = group.doc_candidates()?;
        let scores = scorer.score_relevance(query, &candidates)?;
        if scores.len() != candidates.len() {
            return Err(AuditError::Invalid(format!(
                "scorer returned {} scores for {} candidates",
                scores.len(),
                candidates.len()
            )));
        }
        let by_style: BTreeMap<StyleId, f64> =
            StyleId::ALL.iter().copied().zip(scores).collect();
        rank_vectors.push(RankVector::from_similarities(&by_style)?);
    }
    let avg_ranks = average_ranks(&rank_vectors)?;
    let unfairness = avg_ranks.unfairness();
    Ok(UnfairnessReport {
        scorer: scorer.summary(),
        query_style,
        n_groups: groups.len(),
        avg_ranks,
        unfairness,
    })
}

/// Sweep all ten query styles: one document audit per style, assembled into
/// a matrix with the mean and population std of the ten unfairness scores.
///
/// Groups must be complete on both sides.
pub fn audit_query_styles(
    groups: &[AuditGroup],
    scorer: &dyn RelevanceScorer,
) -> Result<QueryStyleMatrix> {
    if groups.is_empty() {
        return Err(AuditError::Invalid("audit_query_styles: empty corpus".into()));
    }
    for group in groups {
        if !group.is_complete() {
            return Err(AuditError::Invalid(format!(
                "audit_query_styles: group {:?} lacks a full set of query and document styles",
                group.group_id
            )));
        }
    }
    let mut rows = BTreeMap::new();
    for query_style in StyleId::ALL {
        let report = audit_document_styles(groups, scorer, query_style)?;
        rows.insert(query_style, report);
    }
    let scores: Vec<f64> = rows.values().map(|r| r.unfairness).collect();
    let avg = scores.iter().sum::<f64>() / scores.len() as f64;
    let std = population_std(&scores);
    Ok(QueryStyleMatrix { scorer: scorer.summary(), rows, avg, std })
}
