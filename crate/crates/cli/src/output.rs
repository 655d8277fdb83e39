//! Report and manifest emission: atomic writes, CSV projections, plot data.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use style_audit_core::answereval::AnswerReportRecord;
use style_audit_core::corpus::StyleId;
use style_audit_core::error::{AuditError, Result};
use style_audit_core::rankeval::{QueryStyleMatrix, UnfairnessReport, STD_CONVENTION, TIE_RULE};
use style_audit_core::textstats::StyleStatsRow;

/// Write `bytes` to `path` atomically: temp file in the same directory, then
/// rename. A crashed run never leaves a partial report behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|err| AuditError::Io {
            path: parent.to_path_buf(),
            source: err,
        })?;
    }
    let tmp = temp_sibling(path);
    fs::write(&tmp, bytes).map_err(|err| AuditError::Io { path: tmp.clone(), source: err })?;
    fs::rename(&tmp, path).map_err(|err| AuditError::Io {
        path: path.to_path_buf(),
        source: err,
    })
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp-{}", std::process::id()))
}

/// Pretty JSON with a trailing newline; deterministic for the same value.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|err| AuditError::Invalid(format!("serializing report: {err}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// The frozen convention block embedded in every manifest, so reports are
/// self-describing even when rendered as CSV.
pub fn conventions() -> serde_json::Value {
    json!({
        "tie_rule": TIE_RULE,
        "std_convention": STD_CONVENTION,
        "tokenizer": "unicode-whitespace split, lowercased, surrounding punctuation stripped, emoji as standalone tokens",
        "bm25": {"variant": "lucene-idf", "default_k1": 1.5, "default_b": 0.75, "pool": "all document variants of the run"},
        "bleu": {"max_n": 4, "smoothing": "zero-count precisions replaced by 0.1/hyp_len", "brevity_penalty": "exp(1 - ref_len/hyp_len) when hyp shorter"},
        "meteor": {"alpha": 0.9, "beta": 3.0, "gamma": 0.5, "matching": "exact then stem", "synonyms": false},
        "rouge_l": {"beta": 1.0},
    })
}

/// Run manifest written next to each report (`<out>.manifest.json`). The
/// report itself stays timestamp-free so warm reruns are byte-identical.
pub struct ManifestInput<'a> {
    pub command: &'a str,
    pub corpus_path: &'a Path,
    pub scorers: Vec<String>,
    pub n_loaded: usize,
    pub n_used: usize,
    pub rejected: usize,
}

pub fn write_manifest(out_path: &Path, input: &ManifestInput<'_>) -> Result<()> {
    let corpus_bytes = fs::read(input.corpus_path).map_err(|err| AuditError::Io {
        path: input.corpus_path.to_path_buf(),
        source: err,
    })?;
    let digest = Sha256::digest(&corpus_bytes);
    let digest_hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    let generated_unix =
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = json!({
        "command": input.command,
        "corpus": {"path": input.corpus_path.display().to_string(), "sha256": digest_hex},
        "scorers": input.scorers,
        "groups": {"loaded": input.n_loaded, "used": input.n_used, "rejected": input.rejected},
        "conventions": conventions(),
        "generated_unix": generated_unix,
    });
    let manifest_path = manifest_path_for(out_path);
    write_atomic(&manifest_path, &to_json_bytes(&manifest)?)
}

pub fn manifest_path_for(out_path: &Path) -> PathBuf {
    let name = out_path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default();
    out_path.with_file_name(format!("{name}.manifest.json"))
}

fn float(value: f64) -> String {
    format!("{value}")
}

/// CSV projection of document-style reports: one row per scorer, one column
/// per style's average rank.
pub fn reports_to_csv(reports: &[UnfairnessReport]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["scorer".to_string(), "query_style".into(), "n_groups".into()];
    header.extend(StyleId::ALL.iter().map(|s| s.to_string()));
    header.push("unfairness".into());
    write_row(&mut writer, &header)?;
    for report in reports {
        let mut row = vec![
            report.scorer.clone(),
            report.query_style.to_string(),
            report.n_groups.to_string(),
        ];
        row.extend(StyleId::ALL.iter().map(|s| float(report.avg_ranks.mean_ranks[s])));
        row.push(float(report.unfairness));
        write_row(&mut writer, &row)?;
    }
    finish_csv(writer)
}

/// CSV projection of a query-style sweep: one row per scorer, one column per
/// query style (cells are unfairness scores), plus Avg and Std.
pub fn matrices_to_csv(matrices: &[QueryStyleMatrix]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["scorer".to_string()];
    header.extend(StyleId::ALL.iter().map(|s| format!("query_{s}")));
    header.push("avg".into());
    header.push("std".into());
    write_row(&mut writer, &header)?;
    for matrix in matrices {
        let mut row = vec![matrix.scorer.clone()];
        row.extend(StyleId::ALL.iter().map(|s| float(matrix.rows[s].unfairness)));
        row.push(float(matrix.avg));
        row.push(float(matrix.std));
        write_row(&mut writer, &row)?;
    }
    finish_csv(writer)
}

/// CSV projection of answer reports: one row per (scorer, system).
pub fn answers_to_csv(reports: &[AnswerReportRecord]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    write_row(
        &mut writer,
        &["scorer".to_string(), "system".into(), "mean_score".into(), "n".into(), "unfairness".into()],
    )?;
    for report in reports {
        for system in &report.systems {
            write_row(
                &mut writer,
                &[
                    report.scorer.clone(),
                    system.system.clone(),
                    float(system.mean_score),
                    system.n.to_string(),
                    float(report.unfairness),
                ],
            )?;
        }
    }
    finish_csv(writer)
}

/// CSV projection of style statistics.
pub fn stats_to_csv(rows: &[StyleStatsRow]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    write_row(
        &mut writer,
        &[
            "style".to_string(),
            "n".into(),
            "mean_tokens".into(),
            "mean_bleu".into(),
            "mean_meteor".into(),
            "mean_rouge_l".into(),
        ],
    )?;
    for row in rows {
        write_row(
            &mut writer,
            &[
                row.style.to_string(),
                row.n.to_string(),
                float(row.mean_token_length),
                float(row.mean_bleu),
                float(row.mean_meteor),
                float(row.mean_rouge_l),
            ],
        )?;
    }
    finish_csv(writer)
}

/// Emit per-scorer plot series: one CSV per (scorer, query style) with the
/// style label, its mean rank, and the original-document baseline (the
/// dashed-line datum of rank plots). Errors on an empty report list.
pub fn emit_plot_data(reports: &[&UnfairnessReport], dir: &Path) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(AuditError::Invalid("emit_plot_data: no reports".into()));
    }
    fs::create_dir_all(dir)
        .map_err(|err| AuditError::Io { path: dir.to_path_buf(), source: err })?;
    let mut written = Vec::with_capacity(reports.len());
    for (index, report) in reports.iter().enumerate() {
        let baseline = report.avg_ranks.mean_ranks[&StyleId::Original];
        let mut writer = csv::Writer::from_writer(Vec::new());
        write_row(&mut writer, &["style".to_string(), "mean_rank".into(), "baseline".into()])?;
        for style in StyleId::ALL {
            write_row(
                &mut writer,
                &[
                    style.to_string(),
                    float(report.avg_ranks.mean_ranks[&style]),
                    float(baseline),
                ],
            )?;
        }
        let name =
            format!("{index:02}_{}__{}.csv", slug(&report.scorer), report.query_style);
        let path = dir.join(name);
        write_atomic(&path, &finish_csv(writer)?)?;
        written.push(path);
    }
    Ok(written)
}

fn slug(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last_underscore = false;
    for ch in text.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
            last_underscore = false;
        } else if !last_underscore {
            out.push('_');
            last_underscore = true;
        }
    }
    out.trim_matches('_').to_string()
}

fn write_row(writer: &mut csv::Writer<Vec<u8>>, row: &[String]) -> Result<()> {
    writer
        .write_record(row)
        .map_err(|err| AuditError::Invalid(format!("writing csv row: {err}")))
}

fn finish_csv(writer: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    writer
        .into_inner()
        .map_err(|err| AuditError::Invalid(format!("finishing csv: {err}")))
}
