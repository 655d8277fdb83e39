//! Style rewriting through a chat-completion endpoint.
//!
//! Nine fixed style personas turn one source text into nine rewrites. The
//! catalog strings are frozen: changing a single byte would silently change
//! what every downstream audit measures.
//!
//! Message framing: for `style_1`..`style_8` the persona is sent as the
//! system message and the user message is
//! `"Please rewrite the following text:\n\n" + source`. For `style_0` —
//! whose instruction *is* the plain rewrite request — the system message is
//! empty and the same user framing carries the instruction.
//!
//! Generation is sampled (default temperature 0.5), so outputs are not
//! reproducible; the on-disk cache freezes the first accepted output per
//! `(model, style, source)` and makes every later audit deterministic.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::cache::{DiskCache, GEN_NS};
use crate::corpus::{AuditGroup, SourcePair, StyleId};
use crate::endpoint::{ChatApi, ChatRequest};
use crate::error::{AuditError, Result};

/// One entry of the style catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StylePrompt {
    pub style: StyleId,
    pub instruction: &'static str,
}

const CATALOG: [StylePrompt; 9] = [
    StylePrompt {
        style: StyleId::Style0,
        instruction: "Please rewrite the following text",
    },
    StylePrompt {
        style: StyleId::Style1,
        instruction: "Your writing style is formal, efficient, and concise, using professional language and focusing on facts, figures, and data.",
    },
    StylePrompt {
        style: StyleId::Style2,
        instruction: "Your writing style is clear and using simple language, often avoiding idioms or complex sentences.",
    },
    StylePrompt {
        style: StyleId::Style3,
        instruction: "Your writing style is informal, often includes emojis, abbreviations, and internet slang.",
    },
    StylePrompt {
        style: StyleId::Style4,
        instruction: "Your writing style is polite, respectful, and somewhat formal. You use more traditional language and avoid using slang or abbreviations.",
    },
    StylePrompt {
        style: StyleId::Style5,
        instruction: "Your writing style is formal, detailed, and precise manner with structured texts. You use technical language and focus on evidence-based arguments.",
    },
    StylePrompt {
        style: StyleId::Style6,
        instruction: "Your writing style is energetic, motivational, and positive manner.",
    },
    StylePrompt {
        style: StyleId::Style7,
        instruction: "Your writing style is friendly, casual, and empathetic manner with personal anecdotes",
    },
    StylePrompt {
        style: StyleId::Style8,
        instruction: "Your writing style is expressive and emotive (passionate, engaging, empathetic). You use metaphors, analogies, and storytelling to convey your points.",
    },
];

/// The nine style prompts, in order `style_0`..`style_8`. Pure and constant.
pub fn style_catalog() -> &'static [StylePrompt; 9] {
    &CATALOG
}

fn prompt_for(style: StyleId) -> Result<&'static StylePrompt> {
    CATALOG.iter().find(|p| p.style == style).ok_or_else(|| {
        AuditError::Invalid(format!("{style} is not a rewrite style"))
    })
}

/// Generation settings for one run.
#[derive(Debug, Clone)]
pub struct GenerationConfig {
    pub model_id: String,
    /// Sampling temperature; 0.5 by default.
    pub temperature: f64,
    /// Retries after the first attempt, covering transport errors and
    /// rejected (too short) outputs alike.
    pub max_retries: u32,
    /// Maximum in-flight endpoint requests in [`build_groups`].
    pub parallelism: usize,
    /// Accept an output only if its whitespace-token count is at least this
    /// fraction of the source's. Catches refusals and truncations cheaply.
    pub min_length_ratio: f64,
}

impl GenerationConfig {
    pub fn new(model_id: impl Into<String>) -> Self {
        GenerationConfig {
            model_id: model_id.into(),
            temperature: 0.5,
            max_retries: 3,
            parallelism: 8,
            min_length_ratio: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.model_id.is_empty() {
            return Err(AuditError::Config("generation model id is empty".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(AuditError::Config(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.parallelism == 0 {
            return Err(AuditError::Config("parallelism must be >= 1".into()));
        }
        if !(self.min_length_ratio > 0.0 && self.min_length_ratio < 1.0) {
            return Err(AuditError::Config(format!(
                "min_length_ratio must be in (0, 1), got {}",
                self.min_length_ratio
            )));
        }
        Ok(())
    }
}

/// Cache payload for one accepted rewrite.
#[derive(Debug, Serialize, Deserialize)]
struct GenerationRecord {
    model: String,
    style: String,
    output: String,
}

fn task_message(text: &str) -> String {
    format!("Please rewrite the following text:\n\n{text}")
}

/// Rewrite `text` in `style` through the chat endpoint.
///
/// Accepts the first output that is non-empty and long enough per
/// `min_length_ratio`; transport failures and rejected outputs are retried
/// up to `max_retries` times before the last failure is reported.
pub fn rewrite(
    text: &str,
    style: StyleId,
    config: &GenerationConfig,
    api: &dyn ChatApi,
) -> Result<String> {
    config.validate()?;
    if text.trim().is_empty() {
        return Err(AuditError::Invalid("rewrite: empty source text".into()));
    }
    let prompt = prompt_for(style)?;
    let request = ChatRequest {
        model: config.model_id.clone(),
        temperature: config.temperature,
        system: if style == StyleId::Style0 { String::new() } else { prompt.instruction.into() },
        user: task_message(text),
    };
    let source_tokens = text.split_whitespace().count();
    let min_tokens = config.min_length_ratio * source_tokens as f64;
    let attempts = config.max_retries as u64 + 1;
    let mut last_err = None;
    for attempt in 1..=attempts {
        match api.chat(&request) {
            Ok(output) => {
                let output = output.trim().to_string();
                let tokens = output.split_whitespace().count();
                if !output.is_empty() && tokens as f64 >= min_tokens {
                    return Ok(output);
                }
                last_err = Some(AuditError::Endpoint(format!(
                    "rewrite rejected: {tokens} tokens for a {source_tokens}-token source \
                     (min ratio {})",
                    config.min_length_ratio
                )));
            }
            Err(err) => {
                last_err = Some(err);
                if attempt < attempts {
                    std::thread::sleep(Duration::from_millis(200) * attempt as u32);
                }
            }
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Which side of a pair a work item rewrites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GenSide {
    Document,
    Query,
}

/// Build audit groups from raw pairs: the originals plus every successfully
/// generated variant.
///
/// Results are cached by `(model, style, source text)`; a rerun over the
/// same pairs issues no endpoint requests. Per-item failures leave the
/// variant absent (the group becomes incomplete) — the run only aborts when
/// *every* attempted generation failed, which indicates a systemic endpoint
/// problem rather than occasional refusals.
pub fn build_groups(
    pairs: &[SourcePair],
    config: &GenerationConfig,
    api: &dyn ChatApi,
    cache: &DiskCache,
    rewrite_queries: bool,
) -> Result<Vec<AuditGroup>> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(AuditError::Invalid("build_groups: no input pairs".into()));
    }
    for pair in pairs {
        if pair.query.trim().is_empty() || pair.document.trim().is_empty() {
            return Err(AuditError::Invalid(format!(
                "build_groups: pair {:?} has an empty query or document",
                pair.group_id
            )));
        }
    }

    struct WorkItem<'a> {
        pair_idx: usize,
        side: GenSide,
        style: StyleId,
        source: &'a str,
    }

    let mut items = Vec::new();
    for (pair_idx, pair) in pairs.iter().enumerate() {
        for style in StyleId::REWRITES {
            items.push(WorkItem { pair_idx, side: GenSide::Document, style, source: &pair.document });
            if rewrite_queries {
                items.push(WorkItem { pair_idx, side: GenSide::Query, style, source: &pair.query });
            }
        }
    }

    let results: Mutex<Vec<Option<Result<String>>>> =
        Mutex::new((0..items.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = config.parallelism.min(items.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= items.len() {
                    break;
                }
                let item = &items[idx];
                let key =
                    DiskCache::generation_key(&config.model_id, item.style.as_str(), item.source);
                let outcome = cache
                    .get_or_compute(GEN_NS, &key, || {
                        let output = rewrite(item.source, item.style, config, api)?;
                        Ok(GenerationRecord {
                            model: config.model_id.clone(),
                            style: item.style.to_string(),
                            output,
                        })
                    })
                    .map(|record| record.output);
                results.lock().expect("results poisoned")[idx] = Some(outcome);
            });
        }
    });
    let results = results.into_inner().expect("results poisoned");

    let mut groups: Vec<AuditGroup> = pairs
        .iter()
        .map(|pair| AuditGroup {
            group_id: pair.group_id.clone(),
            query_variants: [(StyleId::Original, pair.query.clone())].into(),
            doc_variants: [(StyleId::Original, pair.document.clone())].into(),
        })
        .collect();

    let mut successes = 0usize;
    let mut first_failure: Option<AuditError> = None;
    let mut failures = 0usize;
    for (item, outcome) in items.iter().zip(results) {
        let outcome = outcome.expect("every work item processed");
        match outcome {
            Ok(output) => {
                successes += 1;
                let group = &mut groups[item.pair_idx];
                let variants = match item.side {
                    GenSide::Document => &mut group.doc_variants,
                    GenSide::Query => &mut group.query_variants,
                };
                variants.insert(item.style, output);
            }
            Err(err) => {
                failures += 1;
                first_failure.get_or_insert(err);
            }
        }
    }
    if successes == 0 {
        if let Some(err) = first_failure {
            return Err(AuditError::Endpoint(format!(
                "systemic endpoint failure: all {failures} generation requests failed; first: {err}"
            )));
        }
    }
    Ok(groups)
}
