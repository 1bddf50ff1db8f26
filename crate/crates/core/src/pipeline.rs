//! End-to-end KB construction from a JSON configuration.
//!
//! Each subject runs discovery, extraction, facet typing, expansion and
//! consolidation on its own; a failing subject is reported and skipped.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consolidation::{consolidate_subject, ConsolidationConfig};
use crate::discovery::{discover, load_templates, starter_templates, DiscoveryRequest, Fetcher, FilterConfig, HttpFetcher, OfflineCorpus, QueryTemplate};
use crate::embedding::{load_embeddings, EmbeddingTable};
use crate::error::{Error, Result};
use crate::facets::{type_extractions, ExternalTyper, FacetTyper, HeuristicTyper};
use crate::kb_io::write_kb;
use crate::lexicon::Lexicon;
use crate::model::KnowledgeBase;
use crate::oie::{extract_document, Extraction};
use crate::parse::load_corpus;
use crate::records::write_records;
use crate::scorer::{ExternalPairScorer, PairScorer, ScorerProcess};
use crate::subjects::{expand_subject, ExpandConfig};
use crate::text::Stopwords;

/// Where one subject's documents come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectSource {
    pub concept: String,
    /// Offline search results (`{id}.txt` plus optional `{id}.meta.json`).
    /// Ignored when a search endpoint is configured.
    #[serde(default)]
    pub documents: Option<PathBuf>,
    /// Parsed corpus (JSON lines) covering the retained documents.
    pub parsed: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorerCommand {
    pub command: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// Facet typing: use the heuristic for unanswered queries. Pair
    /// scoring: cluster with embeddings when the scorer fails.
    #[serde(default)]
    pub fallback: bool,
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_host() -> String {
    "wikipedia.org".into()
}

fn default_batch() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub subjects: Vec<SubjectSource>,
    pub lexicon: PathBuf,
    pub embeddings: PathBuf,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    #[serde(default)]
    pub templates: Option<PathBuf>,
    /// Synset id to encyclopedia article id or URL.
    #[serde(default)]
    pub pairings: HashMap<String, String>,
    #[serde(default = "default_host")]
    pub encyclopedia_host: String,
    #[serde(default)]
    pub search_endpoint: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub search_timeout_ms: u64,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub expand: ExpandConfig,
    #[serde(default)]
    pub consolidation: ConsolidationConfig,
    #[serde(default)]
    pub facet_scorer: Option<ScorerCommand>,
    #[serde(default)]
    pub pair_scorer: Option<ScorerCommand>,
    #[serde(default = "default_batch")]
    pub facet_batch_size: usize,
    /// Worker threads for subjects; all cores when unset.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Directory for per-stage JSON-lines records.
    #[serde(default)]
    pub stage_dir: Option<PathBuf>,
}

impl PipelineConfig {
    /// Reads a config; relative paths are taken from the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.lexicon);
        fix(&mut self.embeddings);
        for p in [&mut self.stopwords, &mut self.templates, &mut self.stage_dir]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        for s in &mut self.subjects {
            fix(&mut s.parsed);
            if let Some(d) = &mut s.documents {
                fix(d);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.expand.validate()?;
        self.consolidation.validate()?;
        if self.facet_batch_size == 0 {
            return Err(Error::Config("facet batch size must be at least 1".into()));
        }
        let mut seen = HashSet::new();
        for s in &self.subjects {
            if s.concept.trim().is_empty() {
                return Err(Error::Config("subject with empty concept".into()));
            }
            if !seen.insert(s.concept.as_str()) {
                return Err(Error::Config(format!("subject `{}` listed twice", s.concept)));
            }
            if self.search_endpoint.is_none() && s.documents.is_none() {
                return Err(Error::Config(format!(
                    "subject `{}` has no document directory and no search endpoint is set",
                    s.concept
                )));
            }
        }
        Ok(())
    }
}

/// What happened to one subject.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SubjectRun {
    pub subject: String,
    pub query: String,
    pub documents_found: usize,
    pub documents_retained: usize,
    pub retention_rate: f64,
    pub raw_assertions: usize,
    pub primary: usize,
    pub subgroup: usize,
    pub aspect: usize,
    pub dropped: usize,
    pub subgroups: usize,
    pub aspects: usize,
    pub clusters: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectFailure {
    pub subject: String,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub runs: Vec<SubjectRun>,
    pub failures: Vec<SubjectFailure>,
}

/// Shared read-only inputs of a run.
pub struct Resources {
    pub lexicon: Lexicon,
    pub embeddings: EmbeddingTable,
    pub stopwords: Stopwords,
    pub templates: Vec<QueryTemplate>,
    pub typer: Box<dyn FacetTyper>,
    pub pair_scorer: Option<Box<dyn PairScorer>>,
    pub fetcher: Option<Box<dyn Fetcher>>,
}

impl Resources {
    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        let typer: Box<dyn FacetTyper> = match &cfg.facet_scorer {
            Some(s) => Box::new(ExternalTyper::new(
                ScorerProcess::spawn(&s.command, Duration::from_millis(s.timeout_ms))?,
                s.fallback,
            )),
            None => Box::new(HeuristicTyper),
        };
        let pair_scorer: Option<Box<dyn PairScorer>> = match &cfg.pair_scorer {
            Some(s) => Some(Box::new(ExternalPairScorer::new(ScorerProcess::spawn(
                &s.command,
                Duration::from_millis(s.timeout_ms),
            )?))),
            None => None,
        };
        let fetcher: Option<Box<dyn Fetcher>> = match &cfg.search_endpoint {
            Some(url) => Some(Box::new(HttpFetcher::new(url, Duration::from_millis(cfg.search_timeout_ms))?)),
            None => None,
        };
        Ok(Resources {
            lexicon: Lexicon::load(&cfg.lexicon)?,
            embeddings: load_embeddings(&cfg.embeddings)?,
            stopwords: match &cfg.stopwords {
                Some(p) => Stopwords::load(p)?,
                None => Stopwords::default(),
            },
            templates: match &cfg.templates {
                Some(p) => load_templates(p)?,
                None => starter_templates(),
            },
            typer,
            pair_scorer,
            fetcher,
        })
    }
}

fn stage_file(cfg: &PipelineConfig, subject: &str, stage: &str) -> Option<PathBuf> {
    let safe: String = subject
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect();
    cfg.stage_dir.as_ref().map(|d| d.join(format!("{safe}.{stage}.jsonl")))
}

/// Runs every stage for one subject and returns its part of the KB.
pub fn run_subject(source: &SubjectSource, cfg: &PipelineConfig, res: &Resources) -> Result<(KnowledgeBase, SubjectRun)> {
    let concept = source.concept.trim().to_lowercase();
    let mut run = SubjectRun {
        subject: concept.clone(),
        ..SubjectRun::default()
    };

    let offline;
    let fetcher: &dyn Fetcher = match (&res.fetcher, &source.documents) {
        (Some(f), _) => f.as_ref(),
        (None, Some(dir)) => {
            offline = OfflineCorpus::open(dir)?;
            &offline
        }
        (None, None) => return Err(Error::Config(format!("no document source for `{concept}`"))),
    };
    let discovery = discover(
        &DiscoveryRequest {
            concept: &concept,
            lexicon: &res.lexicon,
            templates: &res.templates,
            pairings: &cfg.pairings,
            encyclopedia_host: &cfg.encyclopedia_host,
            filter: &cfg.filter,
            stopwords: &res.stopwords,
        },
        fetcher,
    )?;
    run.query = discovery.query.clone();
    run.documents_found = discovery.report.entries.len();
    run.documents_retained = discovery.retained.len();
    run.retention_rate = discovery.report.retention_rate();
    if discovery.report.no_reference {
        run.warnings.push("no reference article; documents kept unfiltered".into());
    }
    if let Some(p) = stage_file(cfg, &concept, "filter") {
        write_records(&p, &discovery.report.entries)?;
    }
    if discovery.retained.is_empty() {
        run.warnings.push("no documents retained".into());
        return Ok((KnowledgeBase::new(), run));
    }

    let retained: HashSet<&str> = discovery.retained.iter().map(|d| d.id.as_str()).collect();
    let docs: Vec<_> = load_corpus(&source.parsed)?
        .into_iter()
        .filter(|d| retained.contains(d.id.as_str()))
        .collect();
    let missing = retained.len() - docs.len();
    if missing > 0 {
        run.warnings.push(format!("{missing} retained documents have no parse"));
    }

    let mut extractions: Vec<Extraction> = docs.iter().flat_map(extract_document).collect();
    run.raw_assertions = extractions.len();
    type_extractions(&mut extractions, res.typer.as_ref(), cfg.facet_batch_size)?;
    if let Some(p) = stage_file(cfg, &concept, "typed") {
        write_records(&p, &extractions)?;
    }

    let expansion = expand_subject(&docs, &extractions, &concept, &res.lexicon, &res.embeddings, &cfg.expand);
    run.subgroups = expansion.subgroups.len();
    run.aspects = expansion.aspects.len();
    let routing = expansion.routing;
    run.primary = routing.primary.len();
    run.subgroup = routing.subgroup.len();
    run.aspect = routing.aspect.len();
    run.dropped = routing.dropped;

    let mut kb = KnowledgeBase::new();
    for s in &routing.subjects {
        kb.add_subject(s.clone());
    }
    let mut by_subject: std::collections::BTreeMap<String, Vec<_>> = std::collections::BTreeMap::new();
    for a in routing.into_assertions() {
        by_subject.entry(a.subject.clone()).or_default().push(a);
    }
    if let Some(p) = stage_file(cfg, &concept, "routed") {
        let mut routed = KnowledgeBase::new();
        for s in kb.subjects() {
            routed.add_subject(s.clone());
        }
        for a in by_subject.values().flatten() {
            routed.add_assertion(a.clone())?;
        }
        let file = File::create(&p).map_err(|e| Error::io(&p, e))?;
        write_kb(&routed, BufWriter::new(file))?;
    }
    for (subject, assertions) in by_subject {
        let (merged, report) = consolidate_subject(
            &assertions,
            &res.embeddings,
            res.pair_scorer.as_deref(),
            &cfg.consolidation,
        )?;
        if let Some(reason) = report.fallback {
            run.warnings.push(format!("`{subject}` clustered with embeddings: {reason}"));
        }
        run.clusters += merged.len();
        for a in merged {
            kb.add_assertion(a)?;
        }
    }
    kb.validate(cfg.expand.min_support)?;
    Ok((kb, run))
}

/// Runs all subjects on a bounded worker pool and merges their KBs.
pub fn run_pipeline(cfg: &PipelineConfig, res: &Resources) -> Result<(KnowledgeBase, RunSummary)> {
    if let Some(dir) = &cfg.stage_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<(String, Result<(KnowledgeBase, SubjectRun)>)> = pool.install(|| {
        cfg.subjects
            .par_iter()
            .map(|s| (s.concept.clone(), run_subject(s, cfg, res)))
            .collect()
    });

    let mut kb = KnowledgeBase::new();
    let mut summary = RunSummary::default();
    for (subject, result) in results {
        match result {
            Ok((part, run)) => {
                for w in &run.warnings {
                    log::warn!("{subject}: {w}");
                }
                kb.extend(part)?;
                summary.runs.push(run);
            }
            Err(e) => {
                log::error!("{subject}: {e}");
                summary.failures.push(SubjectFailure {
                    subject,
                    error: e.to_string(),
                });
            }
        }
    }
    Ok((kb, summary))
}
