//! Descriptive statistics of style variants: token length and n-gram
//! similarity (Bleu, Meteor, RougeL) against the original text.
//!
//! All three metrics run on the shared tokenizer and are bounded in `[0, 1]`.
//! Parameters are frozen for reproducibility:
//!
//! * **Bleu** — up to 4-grams, geometric mean of modified precisions;
//!   zero-count precisions are replaced by `ε = 0.1 / hyp_len`; brevity
//!   penalty `exp(1 − ref_len/hyp_len)` when the hypothesis is shorter.
//! * **RougeL** — LCS F-measure with `β = 1` (harmonic mean of `LCS/|hyp|`
//!   and `LCS/|ref|`), computed by exact dynamic programming.
//! * **Meteor** — simplified: unigram alignment by exact token then by a
//!   suffix-stripping stem (no synonym database); `Fmean = P·R/(0.9P + 0.1R)`,
//!   fragmentation penalty `0.5·(chunks/matches)³`.

use std::collections::HashMap;

use serde::Serialize;

use crate::corpus::{AuditGroup, StyleId};
use crate::error::{AuditError, Result};
use crate::tokenize::{token_count, tokenize};

const BLEU_MAX_N: usize = 4;
const METEOR_ALPHA: f64 = 0.9;
const METEOR_BETA: f64 = 3.0;
const METEOR_GAMMA: f64 = 0.5;

/// Which side of the audit groups to describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Document,
    Query,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Document => "document",
            Side::Query => "query",
        }
    }
}

/// Per-style means over a corpus. Metric means compare each variant against
/// the original text of its group (the original row is a self-comparison).
#[derive(Debug, Clone, Serialize)]
pub struct StyleStatsRow {
    pub style: StyleId,
    pub n: usize,
    pub mean_token_length: f64,
    pub mean_bleu: f64,
    pub mean_meteor: f64,
    pub mean_rouge_l: f64,
}

/// Token count of `text` under the shared tokenizer.
pub fn token_length(text: &str) -> usize {
    token_count(text)
}

/// Sentence Bleu of `hypothesis` against `reference`.
pub fn bleu(reference: &str, hypothesis: &str) -> f64 {
    let ref_tokens = tokenize(reference);
    let hyp_tokens = tokenize(hypothesis);
    if hyp_tokens.is_empty() {
        return 0.0;
    }
    let hyp_len = hyp_tokens.len();
    let epsilon = 0.1 / hyp_len as f64;
    let mut log_sum = 0.0;
    for n in 1..=BLEU_MAX_N {
        let hyp_counts = ngram_counts(&hyp_tokens, n);
        let ref_counts = ngram_counts(&ref_tokens, n);
        let total: usize = hyp_counts.values().sum();
        let matched: usize = hyp_counts
            .iter()
            .map(|(gram, count)| (*count).min(ref_counts.get(gram).copied().unwrap_or(0)))
            .sum();
        let precision =
            if matched == 0 { epsilon } else { matched as f64 / total as f64 };
        log_sum += precision.ln();
    }
    let geometric_mean = (log_sum / BLEU_MAX_N as f64).exp();
    let brevity_penalty = if hyp_len < ref_tokens.len() {
        (1.0 - ref_tokens.len() as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };
    brevity_penalty * geometric_mean
}

/// RougeL (LCS F1) of `hypothesis` against `reference`.
pub fn rouge_l(reference: &str, hypothesis: &str) -> f64 {
    let ref_tokens = tokenize(reference);
    let hyp_tokens = tokenize(hypothesis);
    let lcs = lcs_length(&ref_tokens, &hyp_tokens);
    if lcs == 0 {
        return 0.0;
    }
    let precision = lcs as f64 / hyp_tokens.len() as f64;
    let recall = lcs as f64 / ref_tokens.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Simplified Meteor of `hypothesis` against `reference`.
pub fn meteor(reference: &str, hypothesis: &str) -> f64 {
    let ref_tokens = tokenize(reference);
    let hyp_tokens = tokenize(hypothesis);
    if ref_tokens.is_empty() || hyp_tokens.is_empty() {
        return 0.0;
    }
    let matches = align(&hyp_tokens, &ref_tokens);
    if matches.is_empty() {
        return 0.0;
    }
    let m = matches.len() as f64;
    let precision = m / hyp_tokens.len() as f64;
    let recall = m / ref_tokens.len() as f64;
    let fmean =
        precision * recall / (METEOR_ALPHA * precision + (1.0 - METEOR_ALPHA) * recall);
    let chunks = chunk_count(&matches) as f64;
    let penalty = METEOR_GAMMA * (chunks / m).powf(METEOR_BETA);
    fmean * (1.0 - penalty)
}

/// Strip common English suffixes. Deliberately crude: enough to let
/// `cats`/`cat` and `runs`/`run` meet on a shared stem, nothing more.
pub fn stem(token: &str) -> String {
    let t = token;
    if let Some(base) = t.strip_suffix("sses") {
        return format!("{base}ss");
    }
    if let Some(base) = t.strip_suffix("ies") {
        if base.len() >= 2 {
            return format!("{base}i");
        }
    }
    if t.ends_with("ss") {
        return t.to_string();
    }
    if let Some(base) = t.strip_suffix("ing") {
        if base.len() >= 3 && has_vowel(base) {
            return base.to_string();
        }
    }
    if let Some(base) = t.strip_suffix("ed") {
        if base.len() >= 3 && has_vowel(base) {
            return base.to_string();
        }
    }
    if let Some(base) = t.strip_suffix('s') {
        if base.len() >= 2 {
            return base.to_string();
        }
    }
    t.to_string()
}

fn has_vowel(s: &str) -> bool {
    s.chars().any(|c| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y'))
}

/// Greedy unigram alignment: exact matches first, then stem matches over the
/// leftovers. Each hypothesis position pairs with the first unmatched
/// reference position, which keeps the alignment deterministic.
fn align(hyp: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let mut matches = Vec::new();
    let mut ref_used = vec![false; reference.len()];
    let mut hyp_used = vec![false; hyp.len()];
    for (h, token) in hyp.iter().enumerate() {
        if let Some(r) = (0..reference.len()).find(|&r| !ref_used[r] && reference[r] == *token) {
            ref_used[r] = true;
            hyp_used[h] = true;
            matches.push((h, r));
        }
    }
    let ref_stems: Vec<String> = reference.iter().map(|t| stem(t)).collect();
    for (h, token) in hyp.iter().enumerate() {
        if hyp_used[h] {
            continue;
        }
        let hyp_stem = stem(token);
        if let Some(r) = (0..reference.len()).find(|&r| !ref_used[r] && ref_stems[r] == hyp_stem)
        {
            ref_used[r] = true;
            matches.push((h, r));
        }
    }
    matches.sort_unstable();
    matches
}

/// Number of maximal runs of adjacent matches (adjacent in both texts).
fn chunk_count(matches: &[(usize, usize)]) -> usize {
    if matches.is_empty() {
        return 0;
    }
    let mut chunks = 1;
    for pair in matches.windows(2) {
        let (h0, r0) = pair[0];
        let (h1, r1) = pair[1];
        if h1 != h0 + 1 || r1 != r0 + 1 {
            chunks += 1;
        }
    }
    chunks
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn lcs_length(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for token_a in a {
        for (j, token_b) in b.iter().enumerate() {
            curr[j + 1] = if token_a == token_b {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Per-style descriptive statistics over `groups` for the chosen side.
///
/// Every group must be complete on that side; metric means are computed
/// against each group's original text.
pub fn style_stats(groups: &[AuditGroup], side: Side) -> Result<Vec<StyleStatsRow>> {
    if groups.is_empty() {
        return Err(AuditError::Invalid("style_stats: empty corpus".into()));
    }
    fn variants_of(group: &AuditGroup, side: Side) -> &std::collections::BTreeMap<StyleId, String> {
        match side {
            Side::Document => &group.doc_variants,
            Side::Query => &group.query_variants,
        }
    }
    for group in groups {
        if variants_of(group, side).len() != StyleId::ALL.len() {
            return Err(AuditError::Invalid(format!(
                "style_stats: group {:?} is incomplete on the {} side",
                group.group_id,
                side.as_str()
            )));
        }
    }
    let n = groups.len();
    let mut rows = Vec::with_capacity(StyleId::ALL.len());
    for style in StyleId::ALL {
        let mut sum_len = 0.0;
        let mut sum_bleu = 0.0;
        let mut sum_meteor = 0.0;
        let mut sum_rouge = 0.0;
        for group in groups {
            let variants = variants_of(group, side);
            let original = &variants[&StyleId::Original];
            let text = &variants[&style];
            sum_len += token_length(text) as f64;
            sum_bleu += bleu(original, text);
            sum_meteor += meteor(original, text);
            sum_rouge += rouge_l(original, text);
        }
        rows.push(StyleStatsRow {
            style,
            n,
            mean_token_length: sum_len / n as f64,
            mean_bleu: sum_bleu / n as f64,
            mean_meteor: sum_meteor / n as f64,
            mean_rouge_l: sum_rouge / n as f64,
        });
    }
    Ok(rows)
}
