//! Answer-style study: per-system correctness scores and their unfairness.
//!
//! The correctness of a system's answer is proxied by the similarity between
//! the ground-truth answer and the system's answer under an embedding (or
//! mock) scorer. BM25 is rejected here: its scores are unbounded, so they
//! cannot serve as a bounded correctness metric. The spread of per-system
//! mean scores feeds the same `(max - min) * population std` unfairness
//! formula used for rank audits.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::QARecord;
use crate::error::{AuditError, Result};
use crate::rankeval::unfairness;
use crate::scorers::{RelevanceScorer, ScorerKind};

/// Mean correctness score of one answering system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemCorrectness {
    pub system_id: String,
    pub mean_score: f64,
    pub n_answers: usize,
}

/// Similarity-based correctness of `answer` against `gt_answer`.
///
/// Both texts must be non-empty; `bm25` scorers are rejected.
pub fn correctness_score(
    gt_answer: &str,
    answer: &str,
    scorer: &dyn RelevanceScorer,
) -> Result<f64> {
    if scorer.kind() == ScorerKind::Bm25 {
        return Err(AuditError::Invalid(
            "correctness_score: bm25 scores are unbounded and cannot serve as a correctness metric"
                .into(),
        ));
    }
    if gt_answer.trim().is_empty() || answer.trim().is_empty() {
        return Err(AuditError::Invalid(
            "correctness_score: empty ground-truth or answer text".into(),
        ));
    }
    let scores = scorer.score_relevance(gt_answer, &[answer])?;
    Ok(scores[0])
}

/// Mean correctness per system over `records`.
///
/// With `correct_only` (the default in the pipeline) only answers annotated
/// `human_correct = true` qualify; remaining differences in score are then
/// attributable to answer style alone. Systems with no qualifying answers
/// are omitted rather than reported as zero. Rows come back in system-id
/// order. Errors when no answer qualifies across all systems.
pub fn per_system_correctness(
    records: &[QARecord],
    scorer: &dyn RelevanceScorer,
    correct_only: bool,
) -> Result<Vec<SystemCorrectness>> {
    if records.is_empty() {
        return Err(AuditError::Invalid("per_system_correctness: no records".into()));
    }
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for record in records {
        for answer in &record.answers {
            if correct_only && !answer.human_correct {
                continue;
            }
            let score = correctness_score(&record.gt_answer, &answer.text, scorer)?;
            let entry = sums.entry(answer.system_id.clone()).or_insert((0.0, 0));
            entry.0 += score;
            entry.1 += 1;
        }
    }
    if sums.is_empty() {
        return Err(AuditError::Invalid(
            "per_system_correctness: no qualifying answers across all systems".into(),
        ));
    }
    Ok(sums
        .into_iter()
        .map(|(system_id, (sum, n))| SystemCorrectness {
            system_id,
            mean_score: sum / n as f64,
            n_answers: n,
        })
        .collect())
}

/// Unfairness over per-system means: `(max - min) * population std`.
/// Needs at least two systems.
pub fn answer_style_unfairness(rows: &[SystemCorrectness]) -> Result<f64> {
    if rows.len() < 2 {
        return Err(AuditError::Invalid(format!(
            "answer_style_unfairness needs at least 2 systems, got {}",
            rows.len()
        )));
    }
    let means: Vec<f64> = rows.iter().map(|r| r.mean_score).collect();
    Ok(unfairness(&means))
}

/// Serialized answer-style report.
#[derive(Debug, Clone, Serialize)]
pub struct AnswerReportRecord {
    pub scorer: String,
    pub systems: Vec<SystemRecord>,
    pub unfairness: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemRecord {
    pub system: String,
    pub mean_score: f64,
    pub n: usize,
}

impl AnswerReportRecord {
    pub fn new(scorer: String, rows: &[SystemCorrectness], unfairness: f64) -> Self {
        AnswerReportRecord {
            scorer,
            systems: rows
                .iter()
                .map(|row| SystemRecord {
                    system: row.system_id.clone(),
                    mean_score: row.mean_score,
                    n: row.n_answers,
                })
                .collect(),
            unfairness,
        }
    }
}
