//! Pipeline implementations behind the subcommands.
//!
//! Every run validates configuration before any network activity, writes its
//! report atomically, and drops a manifest (scorers, conventions, corpus
//! digest, timestamp) next to it.

use std::path::Path;

use serde_json::json;
use style_audit_core::answereval::{
    answer_style_unfairness, per_system_correctness, AnswerReportRecord,
};
use style_audit_core::cache::DiskCache;
use style_audit_core::corpus::{self, StyleId};
use style_audit_core::endpoint::{EmbeddingApi, HttpEndpoint};
use style_audit_core::error::{AuditError, Result};
use style_audit_core::rankeval::{
    audit_document_styles, audit_query_styles, QueryStyleMatrix, UnfairnessReport,
};
use style_audit_core::scorers::{
    build_scorer, EmbedOptions, RelevanceScorer, ScorerDescriptor, ScorerKind,
};
use style_audit_core::stylegen::{self, GenerationConfig};
use style_audit_core::textstats::{style_stats, Side};

use crate::output;
use crate::{AnswersArgs, AuditArgs, CacheGcArgs, GenerateArgs, OutputFormat, StatsArgs, StatsSide};

/// Map an error to the documented exit code.
pub fn exit_code(err: &AuditError) -> i32 {
    match err {
        AuditError::Config(_) => 2,
        AuditError::Corpus(_) => 3,
        AuditError::Endpoint(_) => 4,
        AuditError::Invalid(_) | AuditError::Io { .. } => 5,
    }
}

/// Split `--scorer` values into individual specs. Commas separate specs, but
/// a comma inside `bm25:k1=..,b=..` belongs to the previous spec, so only a
/// segment that starts a known scorer kind opens a new one.
fn split_scorer_specs(raw: &[String]) -> Vec<String> {
    let mut specs: Vec<String> = Vec::new();
    for value in raw {
        for part in value.split(',') {
            let starts_new = part.starts_with("embedding:")
                || part == "bm25"
                || part.starts_with("bm25:")
                || part.starts_with("mock:");
            match specs.last_mut() {
                Some(last) if !starts_new => {
                    last.push(',');
                    last.push_str(part);
                }
                _ => specs.push(part.to_string()),
            }
        }
    }
    specs
}

fn parse_descriptors(raw: &[String]) -> Result<Vec<ScorerDescriptor>> {
    split_scorer_specs(raw).iter().map(|spec| ScorerDescriptor::parse(spec)).collect()
}

fn parse_style(tag: &str) -> Result<StyleId> {
    tag.parse::<StyleId>()
}

/// Load groups and keep the complete ones, warning about rejects. Errors
/// when nothing remains, naming the first incomplete group.
fn load_complete_groups(
    path: &Path,
    need_query_styles: bool,
) -> Result<(Vec<corpus::AuditGroup>, usize, usize)> {
    let groups = corpus::load_groups(path)?;
    let n_loaded = groups.len();
    if groups.is_empty() {
        return Err(AuditError::Corpus(format!("{}: empty corpus", path.display())));
    }
    let filtered = corpus::require_complete(groups, need_query_styles);
    if filtered.rejected > 0 {
        eprintln!(
            "style-audit: warning: skipped {} incomplete group(s): {}",
            filtered.rejected,
            preview(&filtered.rejected_ids)
        );
    }
    if filtered.kept.is_empty() {
        return Err(AuditError::Corpus(format!(
            "{}: no group holds all required style variants; first incomplete group: {:?}",
            path.display(),
            filtered.rejected_ids.first().map(String::as_str).unwrap_or("<none>")
        )));
    }
    Ok((filtered.kept, n_loaded, filtered.rejected))
}

fn preview(ids: &[String]) -> String {
    const SHOW: usize = 5;
    let mut shown: Vec<&str> = ids.iter().take(SHOW).map(String::as_str).collect();
    if ids.len() > SHOW {
        shown.push("...");
    }
    shown.join(", ")
}

/// Per-descriptor endpoint clients (embedding scorers only), built before
/// any corpus work so configuration errors surface first.
fn build_endpoints(
    descriptors: &[ScorerDescriptor],
    default_endpoint: Option<&str>,
) -> Result<Vec<Option<HttpEndpoint>>> {
    descriptors
        .iter()
        .map(|descriptor| match descriptor {
            ScorerDescriptor::Embedding { model_id, base_url } => {
                let url = base_url
                    .as_deref()
                    .or(default_endpoint)
                    .ok_or_else(|| {
                        AuditError::Config(format!(
                            "embedding scorer {model_id:?} has no endpoint; use \
                             embedding:<model>@<url> or --endpoint"
                        ))
                    })?;
                HttpEndpoint::new(url).map(Some)
            }
            _ => Ok(None),
        })
        .collect()
}

fn embed_options(parallelism: usize) -> EmbedOptions {
    EmbedOptions { parallelism: parallelism.max(1), ..EmbedOptions::default() }
}

pub fn generate_styles(args: GenerateArgs) -> Result<()> {
    let config = GenerationConfig {
        model_id: args.model,
        temperature: args.temperature,
        max_retries: args.max_retries,
        parallelism: args.parallelism,
        min_length_ratio: args.min_length_ratio,
    };
    config.validate()?;
    let endpoint = HttpEndpoint::new(&args.chat_endpoint)?;
    let cache = DiskCache::new(&args.cache_dir);
    let pairs = corpus::load_pairs(&args.corpus)?;
    let groups = stylegen::build_groups(&pairs, &config, &endpoint, &cache, args.rewrite_queries)?;

    let complete = groups
        .iter()
        .filter(|g| g.docs_complete() && (!args.rewrite_queries || g.queries_complete()))
        .count();
    let tmp = args.out.with_extension("jsonl.tmp");
    corpus::write_groups(&tmp, &groups)?;
    std::fs::rename(&tmp, &args.out)
        .map_err(|err| AuditError::Io { path: args.out.clone(), source: err })?;
    output::write_manifest(
        &args.out,
        &output::ManifestInput {
            command: "generate-styles",
            corpus_path: &args.corpus,
            scorers: vec![format!("chat:{}@{}", config.model_id, args.chat_endpoint)],
            n_loaded: pairs.len(),
            n_used: groups.len(),
            rejected: groups.len() - complete,
        },
    )?;
    println!(
        "generated {} group(s) ({} complete) -> {}",
        groups.len(),
        complete,
        args.out.display()
    );
    Ok(())
}

pub fn stats(args: StatsArgs) -> Result<()> {
    let side = match args.side {
        StatsSide::Document => Side::Document,
        StatsSide::Query => Side::Query,
    };
    let groups = corpus::load_groups(&args.corpus)?;
    let n_loaded = groups.len();
    if groups.is_empty() {
        return Err(AuditError::Corpus(format!("{}: empty corpus", args.corpus.display())));
    }
    let (kept, rejected): (Vec<_>, Vec<_>) = groups.into_iter().partition(|g| match side {
        Side::Document => g.docs_complete(),
        Side::Query => g.queries_complete(),
    });
    if !rejected.is_empty() {
        let ids: Vec<String> = rejected.iter().map(|g| g.group_id.clone()).collect();
        eprintln!(
            "style-audit: warning: skipped {} group(s) incomplete on the {} side: {}",
            ids.len(),
            side.as_str(),
            preview(&ids)
        );
    }
    if kept.is_empty() {
        return Err(AuditError::Corpus(format!(
            "{}: no group is complete on the {} side; first incomplete group: {:?}",
            args.corpus.display(),
            side.as_str(),
            rejected.first().map(|g| g.group_id.as_str()).unwrap_or("<none>")
        )));
    }
    let rows = style_stats(&kept, side)?;
    let bytes = match args.format {
        OutputFormat::Json => output::to_json_bytes(&json!({
            "side": side.as_str(),
            "rows": rows,
        }))?,
        OutputFormat::Csv => output::stats_to_csv(&rows)?,
    };
    output::write_atomic(&args.out, &bytes)?;
    output::write_manifest(
        &args.out,
        &output::ManifestInput {
            command: "stats",
            corpus_path: &args.corpus,
            scorers: Vec::new(),
            n_loaded,
            n_used: kept.len(),
            rejected: rejected.len(),
        },
    )?;
    println!("stats over {} group(s) -> {}", kept.len(), args.out.display());
    Ok(())
}

/// Everything audit-docs and audit-queries share: descriptor parsing,
/// endpoint construction, corpus loading, the candidate pool, and the
/// per-scorer prewarm pass.
struct AuditSetup {
    descriptors: Vec<ScorerDescriptor>,
    endpoints: Vec<Option<HttpEndpoint>>,
    groups: Vec<corpus::AuditGroup>,
    pool: Vec<String>,
    cache: DiskCache,
    options: EmbedOptions,
    n_loaded: usize,
    rejected: usize,
}

fn prepare_audit(args: &AuditArgs, need_query_styles: bool) -> Result<AuditSetup> {
    let descriptors = parse_descriptors(&args.scorer)?;
    let endpoints = build_endpoints(&descriptors, args.endpoint.as_deref())?;
    let (groups, n_loaded, rejected) = load_complete_groups(&args.corpus, need_query_styles)?;
    let mut pool = Vec::with_capacity(groups.len() * StyleId::ALL.len());
    for group in &groups {
        for style in StyleId::ALL {
            pool.push(group.doc_variants[&style].clone());
        }
    }
    Ok(AuditSetup {
        descriptors,
        endpoints,
        groups,
        pool,
        cache: DiskCache::new(&args.cache_dir),
        options: embed_options(args.parallelism),
        n_loaded,
        rejected,
    })
}

/// Texts an embedding scorer will need, batched once up front so the group
/// loop runs on a warm cache (that is also what makes reruns byte-identical).
fn prewarm_texts(groups: &[corpus::AuditGroup], query_styles: &[StyleId]) -> Vec<String> {
    let mut texts = Vec::new();
    for group in groups {
        for style in query_styles {
            if let Some(text) = group.query_variants.get(style) {
                texts.push(text.clone());
            }
        }
        for style in StyleId::ALL {
            if let Some(text) = group.doc_variants.get(&style) {
                texts.push(text.clone());
            }
        }
    }
    texts
}

fn build_run_scorer<'a>(
    setup: &'a AuditSetup,
    index: usize,
    query_styles: &[StyleId],
) -> Result<Box<dyn RelevanceScorer + 'a>> {
    let descriptor = &setup.descriptors[index];
    let api = setup.endpoints[index].as_ref().map(|e| e as &dyn EmbeddingApi);
    let scorer = build_scorer(
        descriptor,
        &setup.pool,
        api,
        Some(&setup.cache),
        setup.options.clone(),
    )?;
    if descriptor.kind() == ScorerKind::Embedding {
        // One bulk embedding pass; per-group scoring then reads the cache.
        if let ScorerDescriptor::Embedding { model_id, .. } = descriptor {
            let api = setup.endpoints[index].as_ref().expect("embedding endpoint built");
            let texts = prewarm_texts(&setup.groups, query_styles);
            style_audit_core::scorers::embed_batch(
                &texts,
                model_id,
                api,
                &setup.cache,
                &setup.options,
            )?;
        }
    }
    Ok(scorer)
}

pub fn audit_docs(args: AuditArgs) -> Result<()> {
    let query_style = parse_style(&args.query_style)?;
    let setup = prepare_audit(&args, query_style != StyleId::Original)?;
    let mut reports: Vec<UnfairnessReport> = Vec::with_capacity(setup.descriptors.len());
    for index in 0..setup.descriptors.len() {
        let scorer = build_run_scorer(&setup, index, &[query_style])?;
        reports.push(audit_document_styles(&setup.groups, scorer.as_ref(), query_style)?);
    }
    let bytes = match args.format {
        OutputFormat::Json => {
            let records: Vec<_> = reports.iter().map(UnfairnessReport::to_record).collect();
            output::to_json_bytes(&records)?
        }
        OutputFormat::Csv => output::reports_to_csv(&reports)?,
    };
    output::write_atomic(&args.out, &bytes)?;
    if let Some(plot_dir) = &args.plot_dir {
        let refs: Vec<&UnfairnessReport> = reports.iter().collect();
        output::emit_plot_data(&refs, plot_dir)?;
    }
    output::write_manifest(
        &args.out,
        &output::ManifestInput {
            command: "audit-docs",
            corpus_path: &args.corpus,
            scorers: reports.iter().map(|r| r.scorer.clone()).collect(),
            n_loaded: setup.n_loaded,
            n_used: setup.groups.len(),
            rejected: setup.rejected,
        },
    )?;
    for report in &reports {
        println!(
            "{} query={} groups={} unfairness={:.5}",
            report.scorer, report.query_style, report.n_groups, report.unfairness
        );
    }
    Ok(())
}

pub fn audit_queries(args: AuditArgs) -> Result<()> {
    let setup = prepare_audit(&args, true)?;
    let mut matrices: Vec<QueryStyleMatrix> = Vec::with_capacity(setup.descriptors.len());
    for index in 0..setup.descriptors.len() {
        let scorer = build_run_scorer(&setup, index, &StyleId::ALL)?;
        matrices.push(audit_query_styles(&setup.groups, scorer.as_ref())?);
    }
    let bytes = match args.format {
        OutputFormat::Json => {
            let records: Vec<_> = matrices.iter().map(QueryStyleMatrix::to_record).collect();
            output::to_json_bytes(&records)?
        }
        OutputFormat::Csv => output::matrices_to_csv(&matrices)?,
    };
    output::write_atomic(&args.out, &bytes)?;
    if let Some(plot_dir) = &args.plot_dir {
        let refs: Vec<&UnfairnessReport> =
            matrices.iter().flat_map(|m| m.rows.values()).collect();
        output::emit_plot_data(&refs, plot_dir)?;
    }
    output::write_manifest(
        &args.out,
        &output::ManifestInput {
            command: "audit-queries",
            corpus_path: &args.corpus,
            scorers: matrices.iter().map(|m| m.scorer.clone()).collect(),
            n_loaded: setup.n_loaded,
            n_used: setup.groups.len(),
            rejected: setup.rejected,
        },
    )?;
    for matrix in &matrices {
        println!("{} avg={:.5} std={:.5}", matrix.scorer, matrix.avg, matrix.std);
    }
    Ok(())
}

pub fn audit_answers(args: AnswersArgs) -> Result<()> {
    let descriptors = parse_descriptors(&args.scorer)?;
    for descriptor in &descriptors {
        if descriptor.kind() == ScorerKind::Bm25 {
            return Err(AuditError::Config(
                "bm25 cannot score answer correctness (unbounded values); \
                 use an embedding or mock scorer"
                    .into(),
            ));
        }
    }
    let endpoints = build_endpoints(&descriptors, args.endpoint.as_deref())?;
    let records = corpus::load_qa(&args.corpus)?;
    if records.is_empty() {
        return Err(AuditError::Corpus(format!("{}: empty corpus", args.corpus.display())));
    }
    let cache = DiskCache::new(&args.cache_dir);
    let options = embed_options(args.parallelism);
    let correct_only = !args.include_incorrect;

    // Texts needed for scoring, for the embedding prewarm pass.
    let mut texts = Vec::new();
    for record in &records {
        texts.push(record.gt_answer.clone());
        for answer in &record.answers {
            if correct_only && !answer.human_correct {
                continue;
            }
            texts.push(answer.text.clone());
        }
    }

    let mut reports = Vec::with_capacity(descriptors.len());
    for (descriptor, endpoint) in descriptors.iter().zip(&endpoints) {
        let api = endpoint.as_ref().map(|e| e as &dyn EmbeddingApi);
        let scorer = build_scorer(descriptor, &[], api, Some(&cache), options.clone())?;
        if let ScorerDescriptor::Embedding { model_id, .. } = descriptor {
            let api = endpoint.as_ref().expect("embedding endpoint built");
            style_audit_core::scorers::embed_batch(&texts, model_id, api, &cache, &options)?;
        }
        let rows = per_system_correctness(&records, scorer.as_ref(), correct_only)?;
        let unfairness = answer_style_unfairness(&rows)?;
        reports.push(AnswerReportRecord::new(scorer.summary(), &rows, unfairness));
    }

    let bytes = match args.format {
        OutputFormat::Json => output::to_json_bytes(&reports)?,
        OutputFormat::Csv => output::answers_to_csv(&reports)?,
    };
    output::write_atomic(&args.out, &bytes)?;
    output::write_manifest(
        &args.out,
        &output::ManifestInput {
            command: "audit-answers",
            corpus_path: &args.corpus,
            scorers: reports.iter().map(|r| r.scorer.clone()).collect(),
            n_loaded: records.len(),
            n_used: records.len(),
            rejected: 0,
        },
    )?;
    for report in &reports {
        println!(
            "{} systems={} unfairness={:.5}",
            report.scorer,
            report.systems.len(),
            report.unfairness
        );
    }
    Ok(())
}

pub fn cache_gc(args: CacheGcArgs) -> Result<()> {
    if !args.cache_dir.exists() {
        return Err(AuditError::Config(format!(
            "cache directory {} does not exist",
            args.cache_dir.display()
        )));
    }
    let cache = DiskCache::new(&args.cache_dir);
    let reclaimed = cache.gc(args.max_bytes)?;
    println!("reclaimed {reclaimed} bytes");
    Ok(())
}
