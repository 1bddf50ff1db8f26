use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use cskb_core::consolidation::{consolidate_kb, ConsolidationConfig};
use cskb_core::discovery::{discover, load_templates, starter_templates, DiscoveryRequest, FilterConfig, Fetcher, HttpFetcher, OfflineCorpus};
use cskb_core::embedding::load_embeddings;
use cskb_core::facets::{type_extractions, ExternalTyper, FacetTyper, HeuristicTyper};
use cskb_core::kb_io::{load_kb, save_kb, write_kb};
use cskb_core::lexicon::Lexicon;
use cskb_core::model::{KnowledgeBase, SubjectKind};
use cskb_core::oie::{extract_document, Extraction};
use cskb_core::parse::load_corpus;
use cskb_core::pipeline::{run_pipeline, PipelineConfig, Resources};
use cskb_core::query::{build_context, kb_stats, ContextRequest, DEFAULT_CHAR_LIMIT};
use cskb_core::records::{read_records, write_records};
use cskb_core::scorer::{ExternalPairScorer, PairScorer, ScorerProcess};
use cskb_core::subjects::{expand_subject, ExpandConfig};
use cskb_core::text::Stopwords;
use cskb_core::{Error, Result};

#[derive(Parser)]
#[command(name = "cskb", version, about = "Build and query a faceted commonsense knowledge base")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Retrieve documents for a concept and keep those close to its reference article
    Discover(DiscoverArgs),
    /// Extract assertions from a parsed corpus
    Extract(ExtractArgs),
    /// Attach facet keys to extracted assertions
    TypeFacets(TypeFacetsArgs),
    /// Find subgroups and aspects and route assertions to subjects
    Expand(ExpandArgs),
    /// Cluster equivalent assertions per subject
    Consolidate(ConsolidateArgs),
    /// Run every stage from a JSON config
    Pipeline(PipelineArgs),
    /// Build a context for a question
    Query(QueryArgs),
    /// Count subjects, assertions and facets per subject kind
    Stats(StatsArgs),
}

#[derive(Args)]
struct DiscoverArgs {
    #[arg(long)]
    concept: String,
    #[arg(long)]
    lexicon: PathBuf,
    /// Directory of offline search results
    #[arg(long, conflicts_with = "endpoint", required_unless_present = "endpoint")]
    corpus_dir: Option<PathBuf>,
    /// Search service URL
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
    #[arg(long)]
    templates: Option<PathBuf>,
    /// JSON object mapping synset ids to article ids or URLs
    #[arg(long)]
    pairings: Option<PathBuf>,
    #[arg(long, default_value = "wikipedia.org")]
    host: String,
    #[arg(long, default_value_t = 0.45)]
    rho: f64,
    #[arg(long, default_value_t = 500)]
    max_documents: usize,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Retained documents, one JSON object per line
    #[arg(long)]
    out: PathBuf,
    /// Per-document filter decisions
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Only documents mentioning this word (by lemma)
    #[arg(long)]
    subject: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScorerArgs {
    /// Command line of an external scorer process
    #[arg(long)]
    scorer: Option<String>,
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
    #[arg(long)]
    fallback: bool,
}

#[derive(Args)]
struct TypeFacetsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    scorer: ScorerArgs,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
}

#[derive(Args)]
struct ExpandArgs {
    /// Typed extractions
    #[arg(long)]
    raw: PathBuf,
    /// Parsed corpus the extractions came from
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    subject: String,
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, default_value_t = 0.15)]
    threshold: f64,
    #[arg(long, default_value_t = 3)]
    min_support: u32,
    /// Routed assertions as an unconsolidated KB dump
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConsolidateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[command(flatten)]
    scorer: ScorerArgs,
    #[arg(long, default_value_t = 100)]
    k: usize,
    /// Distance cut; 0.5 with a scorer, 0.3 without
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 0.3)]
    facet_threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    /// KB dump; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run summary as JSON
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    kb: PathBuf,
    #[arg(long)]
    question: String,
    /// Add each assertion's most frequent facet
    #[arg(long)]
    facets: bool,
    #[arg(long, default_value_t = DEFAULT_CHAR_LIMIT)]
    limit: usize,
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Print the context and the assertions used as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    kb: PathBuf,
    #[arg(long)]
    json: bool,
}

fn stopwords(path: Option<&Path>) -> Result<Stopwords> {
    path.map_or_else(|| Ok(Stopwords::default()), Stopwords::load)
}

fn spawn(args: &ScorerArgs) -> Result<Option<ScorerProcess>> {
    args.scorer
        .as_deref()
        .map(|cmd| ScorerProcess::spawn(cmd, Duration::from_millis(args.timeout_ms)))
        .transpose()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Config(format!("{}: {e}", path.display()))
}

fn run_discover(a: DiscoverArgs) -> Result<()> {
    let lexicon = Lexicon::load(&a.lexicon)?;
    let templates = match &a.templates {
        Some(p) => load_templates(p)?,
        None => starter_templates(),
    };
    let pairings: HashMap<String, String> = match &a.pairings {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p).map_err(io_err(p))?)?,
        None => HashMap::new(),
    };
    let fetcher: Box<dyn Fetcher> = match (&a.endpoint, &a.corpus_dir) {
        (Some(url), _) => Box::new(HttpFetcher::new(url, Duration::from_millis(a.timeout_ms))?),
        (None, Some(dir)) => Box::new(OfflineCorpus::open(dir)?),
        (None, None) => unreachable!("clap requires one document source"),
    };
    let filter = FilterConfig::new(a.rho, a.max_documents)?;
    let stopwords = stopwords(a.stopwords.as_deref())?;
    let found = discover(
        &DiscoveryRequest {
            concept: &a.concept,
            lexicon: &lexicon,
            templates: &templates,
            pairings: &pairings,
            encyclopedia_host: &a.host,
            filter: &filter,
            stopwords: &stopwords,
        },
        fetcher.as_ref(),
    )?;
    write_records(&a.out, &found.retained)?;
    if let Some(p) = &a.report {
        write_records(p, &found.report.entries)?;
    }
    eprintln!(
        "query `{}`: kept {} of {} documents",
        found.query,
        found.report.retained_count(),
        found.report.entries.len()
    );
    Ok(())
}

fn run_extract(a: ExtractArgs) -> Result<()> {
    let docs = load_corpus(&a.corpus)?;
    let wanted = a.subject.as_deref().map(str::to_lowercase);
    let mut out: Vec<Extraction> = Vec::new();
    for doc in &docs {
        if let Some(w) = &wanted {
            let mentions = doc
                .sentences
                .iter()
                .flat_map(|s| &s.tokens)
                .any(|t| t.lemma.to_lowercase() == *w);
            if !mentions {
                continue;
            }
        }
        out.extend(extract_document(doc));
    }
    write_records(&a.out, &out)?;
    eprintln!("{} assertions from {} documents", out.len(), docs.len());
    Ok(())
}

fn run_type_facets(a: TypeFacetsArgs) -> Result<()> {
    let mut extractions: Vec<Extraction> = read_records(&a.input)?;
    let typer: Box<dyn FacetTyper> = match spawn(&a.scorer)? {
        Some(p) => Box::new(ExternalTyper::new(p, a.scorer.fallback)),
        None => Box::new(HeuristicTyper),
    };
    type_extractions(&mut extractions, typer.as_ref(), a.batch_size)?;
    write_records(&a.out, &extractions)
}

fn run_expand(a: ExpandArgs) -> Result<()> {
    let extractions: Vec<Extraction> = read_records(&a.raw)?;
    let docs = load_corpus(&a.corpus)?;
    let lexicon = Lexicon::load(&a.lexicon)?;
    let embeddings = load_embeddings(&a.embeddings)?;
    let cfg = ExpandConfig {
        subgroup_threshold: a.threshold,
        min_support: a.min_support,
    };
    cfg.validate()?;
    let subject = a.subject.trim().to_lowercase();
    let expansion = expand_subject(&docs, &extractions, &subject, &lexicon, &embeddings, &cfg);
    let mut kb = KnowledgeBase::new();
    for s in &expansion.routing.subjects {
        kb.add_subject(s.clone());
    }
    let dropped = expansion.routing.dropped;
    for assertion in expansion.routing.into_assertions() {
        kb.add_assertion(assertion)?;
    }
    save_kb(&kb, &a.out)?;
    eprintln!(
        "{} subgroups, {} aspects, {} assertions routed, {} dropped",
        expansion.subgroups.len(),
        expansion.aspects.len(),
        kb.assertion_count(),
        dropped
    );
    Ok(())
}

fn run_consolidate(a: ConsolidateArgs) -> Result<()> {
    let kb = load_kb(&a.input)?;
    let embeddings = load_embeddings(&a.embeddings)?;
    let cfg = ConsolidationConfig {
        k: a.k,
        threshold: a.threshold,
        facet_threshold: a.facet_threshold,
        embedding_fallback: a.scorer.fallback,
        ..ConsolidationConfig::default()
    };
    let external = spawn(&a.scorer)?.map(ExternalPairScorer::new);
    let (out, reports) = consolidate_kb(&kb, &embeddings, external.as_ref().map(|s| s as &dyn PairScorer), &cfg)?;
    save_kb(&out, &a.out)?;
    for r in reports {
        eprintln!("{}: {} assertions, {} clusters", r.subject, r.input, r.clusters);
    }
    Ok(())
}

fn run_pipeline_cmd(a: PipelineArgs) -> Result<bool> {
    let cfg = PipelineConfig::load(&a.config)?;
    let resources = Resources::load(&cfg)?;
    let (kb, summary) = run_pipeline(&cfg, &resources)?;
    match &a.out {
        Some(p) => save_kb(&kb, p)?,
        None => {
            let stdout = std::io::stdout();
            write_kb(&kb, stdout.lock())?;
        }
    }
    if let Some(p) = &a.summary {
        let file = File::create(p).map_err(io_err(p))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, &summary)?;
        w.flush().map_err(io_err(p))?;
    }
    for run in &summary.runs {
        eprintln!(
            "{}: kept {}/{} documents, {} raw assertions, {} clusters",
            run.subject, run.documents_retained, run.documents_found, run.raw_assertions, run.clusters
        );
    }
    for f in &summary.failures {
        eprintln!("{}: failed: {}", f.subject, f.error);
    }
    Ok(summary.failures.is_empty())
}

fn run_query(a: QueryArgs) -> Result<()> {
    let kb = load_kb(&a.kb)?;
    let mut req = ContextRequest::new(&a.question).with_char_limit(a.limit);
    if a.facets {
        req = req.with_facets();
    }
    if let Some(n) = a.top_n {
        req = req.with_top_n(n);
    }
    req.validate()?;
    let context = build_context(&req, &kb, &stopwords(a.stopwords.as_deref())?);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&context)?);
    } else {
        println!("{}", context.text);
    }
    Ok(())
}

fn run_stats(a: StatsArgs) -> Result<()> {
    let stats = kb_stats(&load_kb(&a.kb)?);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&stats)?);
        return Ok(());
    }
    println!("{:<10} {:>8} {:>8} {:>8}", "kind", "#s", "#spo", "#facets");
    for kind in SubjectKind::ALL {
        let s = stats.kinds.get(&kind).copied().unwrap_or_default();
        println!("{:<10} {:>8} {:>8} {:>8}", kind.as_str(), s.subjects, s.assertions, s.facets);
    }
    let t = stats.total;
    println!("{:<10} {:>8} {:>8} {:>8}", "all", t.subjects, t.assertions, t.facets);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Discover(a) => run_discover(a).map(|_| true),
        Command::Extract(a) => run_extract(a).map(|_| true),
        Command::TypeFacets(a) => run_type_facets(a).map(|_| true),
        Command::Expand(a) => run_expand(a).map(|_| true),
        Command::Consolidate(a) => run_consolidate(a).map(|_| true),
        Command::Pipeline(a) => run_pipeline_cmd(a),
        Command::Query(a) => run_query(a).map(|_| true),
        Command::Stats(a) => run_stats(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
