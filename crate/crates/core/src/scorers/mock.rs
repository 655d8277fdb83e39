//! Deterministic offline scorer for golden tests and bias-direction checks.
//!
//! Candidate lists in the audit pipeline are always in canonical style order
//! (`original`, `style_0`, ..., `style_8`), so a candidate's list position is
//! its style's canonical index. The mock exploits that to build controlled
//! bias patterns without any model:
//!
//! * `position` — similarity `1 / (1 + i)` for candidate index `i`: the
//!   original wins, ranks come out exactly `1..=n`.
//! * `hash` — a stable pseudo-similarity in `[0, 1)` hashed from the
//!   `(query, candidate)` texts; bit-identical across runs and platforms.
//! * either base accepts `+bump=<style_tag>:<delta>` (add `delta` at that
//!   style's canonical position) or `+bump=query:<delta>` (add `delta` at the
//!   position of the style tag found in the query text, emulating scorers
//!   that match the document style to the query style).
//!
//! A `table` variant with fixed `(query, candidate) → score` entries exists
//! for programmatic fixtures; it has no CLI syntax.

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::corpus::StyleId;
use crate::error::{AuditError, Result};

use super::{RelevanceScorer, ScorerKind};

/// Where a mock bias bump lands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BumpTarget {
    /// Fixed style: bump the candidate at this style's canonical position.
    Style(StyleId),
    /// Follow the query: bump at the position of the style tag (e.g.
    /// `"style_3"`) appearing in the query text; no bump if none appears.
    QueryTag,
}

/// Mock scorer specification.
#[derive(Debug, Clone, PartialEq)]
pub enum MockSpec {
    Position { bump: Option<(BumpTarget, f64)> },
    Hash { bump: Option<(BumpTarget, f64)> },
    Table { entries: BTreeMap<(String, String), f64>, default: f64 },
}

impl MockSpec {
    /// Parse the CLI grammar: `position` or `hash`, optionally followed by
    /// `+bump=<style_tag|query>:<delta>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (base, bump_spec) = match spec.split_once("+bump=") {
            Some((base, bump)) => (base, Some(bump)),
            None => (spec, None),
        };
        let bump = bump_spec.map(parse_bump).transpose()?;
        match base.trim() {
            "position" => Ok(MockSpec::Position { bump }),
            "hash" => Ok(MockSpec::Hash { bump }),
            other => Err(AuditError::Config(format!(
                "unknown mock spec {other:?}; expected position or hash"
            ))),
        }
    }
}

fn parse_bump(spec: &str) -> Result<(BumpTarget, f64)> {
    let (target, delta) = spec.rsplit_once(':').ok_or_else(|| {
        AuditError::Config(format!("mock bump {spec:?} is not <target>:<delta>"))
    })?;
    let delta: f64 = delta
        .parse()
        .map_err(|_| AuditError::Config(format!("mock bump delta {delta:?} is not a number")))?;
    let target = match target {
        "query" => BumpTarget::QueryTag,
        tag => BumpTarget::Style(tag.parse()?),
    };
    Ok((target, delta))
}

impl fmt::Display for MockSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let write_bump = |f: &mut fmt::Formatter<'_>, bump: &Option<(BumpTarget, f64)>| match bump
        {
            Some((BumpTarget::Style(style), delta)) => write!(f, "+bump={style}:{delta}"),
            Some((BumpTarget::QueryTag, delta)) => write!(f, "+bump=query:{delta}"),
            None => Ok(()),
        };
        match self {
            MockSpec::Position { bump } => {
                write!(f, "position")?;
                write_bump(f, bump)
            }
            MockSpec::Hash { bump } => {
                write!(f, "hash")?;
                write_bump(f, bump)
            }
            MockSpec::Table { entries, .. } => write!(f, "table(n={})", entries.len()),
        }
    }
}

/// [`RelevanceScorer`] over a [`MockSpec`]. Pure: two runs produce
/// bit-identical scores.
pub struct MockScorer {
    spec: MockSpec,
}

impl MockScorer {
    pub fn new(spec: MockSpec) -> Self {
        MockScorer { spec }
    }
}

impl RelevanceScorer for MockScorer {
    fn score_relevance(&self, query: &str, candidates: &[&str]) -> Result<Vec<f64>> {
        if candidates.is_empty() {
            return Err(AuditError::Invalid("score_relevance: no candidates".into()));
        }
        let mut scores: Vec<f64> = match &self.spec {
            MockSpec::Position { .. } => {
                (0..candidates.len()).map(|i| 1.0 / (1.0 + i as f64)).collect()
            }
            MockSpec::Hash { .. } => {
                candidates.iter().map(|candidate| hash01(query, candidate)).collect()
            }
            MockSpec::Table { entries, default } => candidates
                .iter()
                .map(|candidate| {
                    entries
                        .get(&(query.to_string(), candidate.to_string()))
                        .copied()
                        .unwrap_or(*default)
                })
                .collect(),
        };
        let bump = match &self.spec {
            MockSpec::Position { bump } | MockSpec::Hash { bump } => *bump,
            MockSpec::Table { .. } => None,
        };
        if let Some((target, delta)) = bump {
            let index = match target {
                BumpTarget::Style(style) => Some(style.canonical_index()),
                BumpTarget::QueryTag => query_style_tag(query).map(StyleId::canonical_index),
            };
            if let Some(index) = index {
                if let Some(score) = scores.get_mut(index) {
                    *score += delta;
                }
            }
        }
        Ok(scores)
    }

    fn summary(&self) -> String {
        format!("mock:{}", self.spec)
    }

    fn kind(&self) -> ScorerKind {
        ScorerKind::Mock
    }
}

/// Style tag mentioned in a query text, if any. Rewrite tags are checked
/// before `original` so a query like `"... original style_4"` resolves to the
/// more specific rewrite tag.
fn query_style_tag(query: &str) -> Option<StyleId> {
    StyleId::REWRITES
        .into_iter()
        .find(|style| query.contains(style.as_str()))
        .or_else(|| query.contains("original").then_some(StyleId::Original))
}

/// Stable pseudo-similarity in `[0, 1)` from the pair of texts.
fn hash01(query: &str, candidate: &str) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(query.as_bytes());
    hasher.update([0u8]);
    hasher.update(candidate.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    // Top 53 bits into the unit interval: exactly representable in f64.
    (u64::from_be_bytes(bytes) >> 11) as f64 / (1u64 << 53) as f64
}
