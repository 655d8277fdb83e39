//! `style-audit`: batch audits of writing-style bias in retrieval scorers.
//!
//! Subcommands mirror the audit pipeline: `generate-styles` produces styled
//! corpora through a chat endpoint, `stats` describes them, `audit-docs` /
//! `audit-queries` measure rank bias, `audit-answers` measures correctness
//! bias over QA records, and `cache-gc` trims the shared on-disk cache.
//!
//! Exit codes: 0 success, 2 configuration error, 3 corpus error, 4 endpoint
//! error, 5 internal error.

mod output;
mod run;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "style-audit", version, about = "Writing-style bias audits for retrieval scorers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatsSide {
    Document,
    Query,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite query/document pairs into the nine styles via a chat endpoint.
    GenerateStyles(GenerateArgs),
    /// Descriptive statistics (length, Bleu, Meteor, RougeL) per style.
    Stats(StatsArgs),
    /// Rank the ten document variants per group and score the bias.
    AuditDocs(AuditArgs),
    /// Repeat the document audit under every query style.
    AuditQueries(AuditArgs),
    /// Score answer correctness per QA system and its bias.
    AuditAnswers(AnswersArgs),
    /// Evict least-recently-used cache entries down to a byte budget.
    CacheGc(CacheGcArgs),
}

#[derive(Debug, clap::Args)]
pub struct GenerateArgs {
    /// Input pairs, JSONL: {"group_id", "query", "document"}.
    #[arg(long)]
    pub corpus: std::path::PathBuf,
    /// Output corpus path (group JSONL).
    #[arg(long)]
    pub out: std::path::PathBuf,
    /// Chat model id.
    #[arg(long)]
    pub model: String,
    /// Chat endpoint base URL (OpenAI-compatible).
    #[arg(long = "chat-endpoint")]
    pub chat_endpoint: String,
    /// Cache directory shared across runs.
    #[arg(long = "cache-dir", default_value = ".style-audit-cache")]
    pub cache_dir: std::path::PathBuf,
    /// Sampling temperature.
    #[arg(long, default_value_t = 0.5)]
    pub temperature: f64,
    /// Retries per item after the first attempt.
    #[arg(long = "max-retries", default_value_t = 3)]
    pub max_retries: u32,
    /// Maximum in-flight endpoint requests.
    #[arg(long, default_value_t = 8)]
    pub parallelism: usize,
    /// Minimum output/source token ratio accepted.
    #[arg(long = "min-length-ratio", default_value_t = 0.1)]
    pub min_length_ratio: f64,
    /// Also rewrite the query side.
    #[arg(long = "rewrite-queries")]
    pub rewrite_queries: bool,
}

#[derive(Debug, clap::Args)]
pub struct StatsArgs {
    /// Group corpus, JSONL.
    #[arg(long)]
    pub corpus: std::path::PathBuf,
    /// Report path.
    #[arg(long)]
    pub out: std::path::PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Which side of each group to describe.
    #[arg(long, value_enum, default_value_t = StatsSide::Document)]
    pub side: StatsSide,
}

#[derive(Debug, clap::Args)]
pub struct AuditArgs {
    /// Group corpus, JSONL.
    #[arg(long)]
    pub corpus: std::path::PathBuf,
    /// Scorer spec(s): embedding:<model>[@url], bm25[:k1=..,b=..], mock:<spec>.
    /// Comma-separated or repeated.
    #[arg(long, required = true)]
    pub scorer: Vec<String>,
    /// Cache directory shared across runs.
    #[arg(long = "cache-dir", default_value = ".style-audit-cache")]
    pub cache_dir: std::path::PathBuf,
    /// Report path.
    #[arg(long)]
    pub out: std::path::PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Query style for audit-docs (ignored by audit-queries).
    #[arg(long = "query-style", default_value = "original")]
    pub query_style: String,
    /// Default embedding endpoint base URL for specs without @url.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Maximum in-flight embedding requests.
    #[arg(long, default_value_t = 8)]
    pub parallelism: usize,
    /// Emit per-scorer plot series (CSV) into this directory.
    #[arg(long = "plot-dir")]
    pub plot_dir: Option<std::path::PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct AnswersArgs {
    /// QA corpus, JSONL: {"question", "gt_answer", "answers": [...]}.
    #[arg(long)]
    pub corpus: std::path::PathBuf,
    /// Scorer spec(s); bm25 is rejected for correctness scoring.
    #[arg(long, required = true)]
    pub scorer: Vec<String>,
    #[arg(long = "cache-dir", default_value = ".style-audit-cache")]
    pub cache_dir: std::path::PathBuf,
    /// Report path.
    #[arg(long)]
    pub out: std::path::PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Default embedding endpoint base URL for specs without @url.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long, default_value_t = 8)]
    pub parallelism: usize,
    /// Also score answers annotated as incorrect.
    #[arg(long = "include-incorrect")]
    pub include_incorrect: bool,
}

#[derive(Debug, clap::Args)]
pub struct CacheGcArgs {
    #[arg(long = "cache-dir")]
    pub cache_dir: std::path::PathBuf,
    /// Target cache size in bytes.
    #[arg(long = "max-bytes")]
    pub max_bytes: u64,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenerateStyles(args) => run::generate_styles(args),
        Command::Stats(args) => run::stats(args),
        Command::AuditDocs(args) => run::audit_docs(args),
        Command::AuditQueries(args) => run::audit_queries(args),
        Command::AuditAnswers(args) => run::audit_answers(args),
        Command::CacheGc(args) => run::cache_gc(args),
    };
    if let Err(err) = result {
        eprintln!("style-audit: {err}");
        std::process::exit(run::exit_code(&err));
    }
}
