//! Audit corpora: styled retrieval groups and annotated QA records.
//!
//! Both corpora are JSONL (one record per line) so audits can stream them
//! group by group. Loading trims surrounding whitespace from every text field
//! but preserves interior content verbatim — emojis, newlines, and slang are
//! part of the style signal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

/// Identifier for one of the ten writing styles of a text.
///
/// `Original` is the human-written source; `Style0`..`Style8` are the nine
/// generated rewrites. The derived ordering is the canonical ordering
/// (`Original < Style0 < ... < Style8`) used for every rank vector, report
/// column, and candidate list.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum StyleId {
    #[serde(rename = "original")]
    Original,
    #[serde(rename = "style_0")]
    Style0,
    #[serde(rename = "style_1")]
    Style1,
    #[serde(rename = "style_2")]
    Style2,
    #[serde(rename = "style_3")]
    Style3,
    #[serde(rename = "style_4")]
    Style4,
    #[serde(rename = "style_5")]
    Style5,
    #[serde(rename = "style_6")]
    Style6,
    #[serde(rename = "style_7")]
    Style7,
    #[serde(rename = "style_8")]
    Style8,
}

impl StyleId {
    /// All ten styles in canonical order.
    pub const ALL: [StyleId; 10] = [
        StyleId::Original,
        StyleId::Style0,
        StyleId::Style1,
        StyleId::Style2,
        StyleId::Style3,
        StyleId::Style4,
        StyleId::Style5,
        StyleId::Style6,
        StyleId::Style7,
        StyleId::Style8,
    ];

    /// The nine rewrite styles, in order `Style0`..`Style8`.
    pub const REWRITES: [StyleId; 9] = [
        StyleId::Style0,
        StyleId::Style1,
        StyleId::Style2,
        StyleId::Style3,
        StyleId::Style4,
        StyleId::Style5,
        StyleId::Style6,
        StyleId::Style7,
        StyleId::Style8,
    ];

    /// Position in the canonical order: `Original` is 0, `Style8` is 9.
    pub fn canonical_index(self) -> usize {
        StyleId::ALL.iter().position(|s| *s == self).unwrap()
    }

    /// Serialized tag: `"original"`, `"style_0"`, ..., `"style_8"`.
    pub fn as_str(self) -> &'static str {
        match self {
            StyleId::Original => "original",
            StyleId::Style0 => "style_0",
            StyleId::Style1 => "style_1",
            StyleId::Style2 => "style_2",
            StyleId::Style3 => "style_3",
            StyleId::Style4 => "style_4",
            StyleId::Style5 => "style_5",
            StyleId::Style6 => "style_6",
            StyleId::Style7 => "style_7",
            StyleId::Style8 => "style_8",
        }
    }
}

impl fmt::Display for StyleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StyleId {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        StyleId::ALL
            .into_iter()
            .find(|style| style.as_str() == s)
            .ok_or_else(|| AuditError::Config(format!("unknown style id {s:?}")))
    }
}

/// One semantic unit of the retrieval audit: a query and a document, each
/// with up to ten style variants keyed by [`StyleId`].
///
/// The `original` key is always present on both sides; generated variants may
/// be missing when generation failed for an item. A side is *complete* when
/// all ten styles are present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditGroup {
    pub group_id: String,
    #[serde(rename = "query")]
    pub query_variants: BTreeMap<StyleId, String>,
    #[serde(rename = "document")]
    pub doc_variants: BTreeMap<StyleId, String>,
}

impl AuditGroup {
    /// True when the document side holds all ten styles.
    pub fn docs_complete(&self) -> bool {
        self.doc_variants.len() == StyleId::ALL.len()
    }

    /// True when the query side holds all ten styles.
    pub fn queries_complete(&self) -> bool {
        self.query_variants.len() == StyleId::ALL.len()
    }

    /// True when both sides hold all ten styles.
    pub fn is_complete(&self) -> bool {
        self.docs_complete() && self.queries_complete()
    }

    /// The ten document variants in canonical style order.
    ///
    /// Errors if the document side is incomplete.
    pub fn doc_candidates(&self) -> Result<Vec<&str>> {
        StyleId::ALL
            .iter()
            .map(|style| {
                self.doc_variants
                    .get(style)
                    .map(String::as_str)
                    .ok_or_else(|| {
                        AuditError::Invalid(format!(
                            "group {:?} is missing document variant {}",
                            self.group_id, style
                        ))
                    })
            })
            .collect()
    }

    fn validate(&self, line: usize) -> Result<()> {
        for (side, variants) in [("query", &self.query_variants), ("document", &self.doc_variants)]
        {
            if !variants.contains_key(&StyleId::Original) {
                return Err(AuditError::Corpus(format!(
                    "line {line}: group {:?} is missing the \"original\" key under {side}",
                    self.group_id
                )));
            }
            for (style, text) in variants {
                if text.is_empty() {
                    return Err(AuditError::Corpus(format!(
                        "line {line}: group {:?} has an empty {side} text for style {style}",
                        self.group_id
                    )));
                }
            }
        }
        Ok(())
    }

    fn trim_texts(&mut self) {
        for text in self.query_variants.values_mut().chain(self.doc_variants.values_mut()) {
            let trimmed = text.trim();
            if trimmed.len() != text.len() {
                *text = trimmed.to_string();
            }
        }
    }
}

/// One answer produced by a QA system, with its human correctness annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemAnswer {
    #[serde(rename = "system")]
    pub system_id: String,
    pub text: String,
    pub human_correct: bool,
}

/// A question with its ground-truth answer and per-system answers.
///
/// Loading preserves all annotations, including `human_correct = false`
/// entries; filtering happens downstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QARecord {
    pub question: String,
    pub gt_answer: String,
    pub answers: Vec<SystemAnswer>,
}

/// Raw generation input: one query/document pair before style rewriting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourcePair {
    pub group_id: String,
    pub query: String,
    pub document: String,
}

/// Load audit groups from a JSONL file, in file order.
///
/// Fails on unreadable files, malformed lines (reported with the line
/// number), duplicate group ids, missing `original` keys, and empty texts.
/// Blank lines are skipped.
pub fn load_groups(path: impl AsRef<Path>) -> Result<Vec<AuditGroup>> {
    let path = path.as_ref();
    let mut groups = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for (line_no, line) in read_lines(path)? {
        let mut group: AuditGroup = serde_json::from_str(&line).map_err(|err| {
            AuditError::Corpus(format!("{}: line {line_no}: {err}", path.display()))
        })?;
        group.trim_texts();
        group.validate(line_no)?;
        if !seen_ids.insert(group.group_id.clone()) {
            return Err(AuditError::Corpus(format!(
                "{}: line {line_no}: duplicate group_id {:?}",
                path.display(),
                group.group_id
            )));
        }
        groups.push(group);
    }
    Ok(groups)
}

/// Write audit groups as JSONL, one group per line.
pub fn write_groups(path: impl AsRef<Path>, groups: &[AuditGroup]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|err| AuditError::io(path, err))?;
    let mut out = BufWriter::new(file);
    for group in groups {
        serde_json::to_writer(&mut out, group)
            .map_err(|err| AuditError::Corpus(format!("serializing group: {err}")))?;
        out.write_all(b"\n").map_err(|err| AuditError::io(path, err))?;
    }
    out.flush().map_err(|err| AuditError::io(path, err))
}

/// Load QA records from a JSONL file.
///
/// Annotations are kept intact; records with duplicated system ids are
/// rejected with their record index.
pub fn load_qa(path: impl AsRef<Path>) -> Result<Vec<QARecord>> {
    let path = path.as_ref();
    let mut records = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let mut record: QARecord = serde_json::from_str(&line).map_err(|err| {
            AuditError::Corpus(format!("{}: line {line_no}: {err}", path.display()))
        })?;
        record.question = record.question.trim().to_string();
        record.gt_answer = record.gt_answer.trim().to_string();
        for answer in &mut record.answers {
            answer.text = answer.text.trim().to_string();
        }
        if record.gt_answer.is_empty() {
            return Err(AuditError::Corpus(format!(
                "{}: line {line_no}: empty gt_answer",
                path.display()
            )));
        }
        let mut seen = BTreeSet::new();
        for answer in &record.answers {
            if !seen.insert(answer.system_id.as_str()) {
                return Err(AuditError::Corpus(format!(
                    "{}: line {line_no}: duplicate system id {:?} within one record",
                    path.display(),
                    answer.system_id
                )));
            }
        }
        records.push(record);
    }
    Ok(records)
}

/// Load generation input pairs from a JSONL file.
pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<SourcePair>> {
    let path = path.as_ref();
    let mut pairs = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for (line_no, line) in read_lines(path)? {
        let mut pair: SourcePair = serde_json::from_str(&line).map_err(|err| {
            AuditError::Corpus(format!("{}: line {line_no}: {err}", path.display()))
        })?;
        pair.query = pair.query.trim().to_string();
        pair.document = pair.document.trim().to_string();
        if pair.query.is_empty() || pair.document.is_empty() {
            return Err(AuditError::Corpus(format!(
                "{}: line {line_no}: pair {:?} has an empty query or document",
                path.display(),
                pair.group_id
            )));
        }
        if !seen_ids.insert(pair.group_id.clone()) {
            return Err(AuditError::Corpus(format!(
                "{}: line {line_no}: duplicate group_id {:?}",
                path.display(),
                pair.group_id
            )));
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

/// Result of [`require_complete`]: the retained groups and the number of
/// rejected (incomplete) ones.
#[derive(Debug, Clone)]
pub struct CompleteGroups {
    pub kept: Vec<AuditGroup>,
    pub rejected: usize,
    /// Group ids of the rejected groups, in input order.
    pub rejected_ids: Vec<String>,
}

/// Keep only groups whose document side (and, when `need_query_styles`, query
/// side) holds all ten styles. Filtering preserves input order and is
/// idempotent; incomplete groups are counted, not fatal.
pub fn require_complete(groups: Vec<AuditGroup>, need_query_styles: bool) -> CompleteGroups {
    let mut kept = Vec::with_capacity(groups.len());
    let mut rejected_ids = Vec::new();
    for group in groups {
        let ok = group.docs_complete() && (!need_query_styles || group.queries_complete());
        if ok {
            kept.push(group);
        } else {
            rejected_ids.push(group.group_id.clone());
        }
    }
    CompleteGroups {
        kept,
        rejected: rejected_ids.len(),
        rejected_ids,
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path)
        .map_err(|err| AuditError::Corpus(format!("{}: {err}", path.display())))?;
    let reader = BufReader::new(file);
    let mut lines = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line
            .map_err(|err| AuditError::Corpus(format!("{}: {err}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        lines.push((idx + 1, line));
    }
    Ok(lines)
}
