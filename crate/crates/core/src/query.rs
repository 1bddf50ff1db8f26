//! Reading the KB: verbalized contexts for questions and per-kind counts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Facet, FacetKey, FacetedAssertion, KnowledgeBase, SubjectKind};
use crate::text::{capitalize_first, pluralize, singularize, tokens, Stopwords};

pub const DEFAULT_CHAR_LIMIT: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FacetMode {
    #[default]
    TriplesOnly,
    WithFacets,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextRequest {
    pub query: String,
    pub char_limit: usize,
    pub facet_mode: FacetMode,
    /// Stop after this many statements.
    pub top_n: Option<usize>,
}

impl ContextRequest {
    pub fn new(query: impl Into<String>) -> Self {
        ContextRequest {
            query: query.into(),
            char_limit: DEFAULT_CHAR_LIMIT,
            facet_mode: FacetMode::TriplesOnly,
            top_n: None,
        }
    }

    pub fn with_facets(mut self) -> Self {
        self.facet_mode = FacetMode::WithFacets;
        self
    }

    pub fn with_char_limit(mut self, limit: usize) -> Self {
        self.char_limit = limit;
        self
    }

    pub fn with_top_n(mut self, n: usize) -> Self {
        self.top_n = Some(n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.char_limit == 0 {
            return Err(Error::Config("character limit must be at least 1".into()));
        }
        Ok(())
    }
}

fn verbal_predicate(predicate: &str) -> String {
    match predicate.split_once(' ') {
        _ if predicate == "be" => "are".to_string(),
        Some(("be", rest)) => format!("are {rest}"),
        _ => predicate.to_string(),
    }
}

fn is_single_adverb(f: &Facet) -> bool {
    f.key == FacetKey::Degree && !f.value.contains(' ')
}

/// One sentence for an assertion with the given facets: plural subject,
/// "be" as "are", surface object when stored. Single-word degree facets
/// go right before the object, other facets after it.
pub fn verbalize_facets(a: &FacetedAssertion, facets: &[&Facet]) -> String {
    let mut parts = vec![pluralize(&a.subject), verbal_predicate(&a.predicate)];
    parts.extend(facets.iter().filter(|f| is_single_adverb(f)).map(|f| f.value.clone()));
    parts.push(a.surface_object.clone().unwrap_or_else(|| a.object.clone()));
    parts.extend(facets.iter().filter(|f| !is_single_adverb(f)).map(|f| f.value.clone()));
    let sentence = parts
        .into_iter()
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    format!("{}.", capitalize_first(&sentence))
}

/// The assertion as a sentence, with all its facets or none.
pub fn verbalize(a: &FacetedAssertion, with_facets: bool) -> String {
    let facets: Vec<&Facet> = if with_facets { a.facets.iter().collect() } else { Vec::new() };
    verbalize_facets(a, &facets)
}

/// The sentence used in contexts: no facets, or only the most frequent.
pub fn context_sentence(a: &FacetedAssertion, mode: FacetMode) -> String {
    match mode {
        FacetMode::TriplesOnly => verbalize_facets(a, &[]),
        FacetMode::WithFacets => verbalize_facets(a, &a.top_facet().into_iter().collect::<Vec<_>>()),
    }
}

/// True when every word of `subject` occurs in the query, compared after
/// naive singularization.
pub fn mentions_subject(query_words: &BTreeSet<String>, subject: &str) -> bool {
    subject.split_whitespace().all(|w| query_words.contains(&singularize(w)))
}

/// Distinct non-stopword query tokens that occur in `sentence`.
pub fn overlap(query_tokens: &BTreeSet<String>, sentence: &str) -> usize {
    let words: BTreeSet<String> = tokens(sentence).collect();
    query_tokens.intersection(&words).count()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsedAssertion {
    pub subject: String,
    pub rank: usize,
    pub overlap: usize,
    pub sentence: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Context {
    pub text: String,
    pub used: Vec<UsedAssertion>,
}

/// Candidates for a query in context order: assertions whose subject the
/// query mentions, by overlap (descending), KB rank, then subject.
pub fn rank_candidates(query: &str, kb: &KnowledgeBase, mode: FacetMode, stopwords: &Stopwords) -> Vec<UsedAssertion> {
    let query_tokens: BTreeSet<String> = tokens(query).filter(|t| !stopwords.contains(t)).collect();
    let query_words: BTreeSet<String> = tokens(query).map(|t| singularize(&t)).collect();
    let mut out: Vec<UsedAssertion> = Vec::new();
    for subject in kb.subjects() {
        if !mentions_subject(&query_words, &subject.name) {
            continue;
        }
        for (rank, a) in kb.assertions_of(&subject.name).iter().enumerate() {
            let sentence = context_sentence(a, mode);
            out.push(UsedAssertion {
                subject: subject.name.clone(),
                rank,
                overlap: overlap(&query_tokens, &sentence),
                sentence,
            });
        }
    }
    out.sort_by(|a, b| {
        b.overlap
            .cmp(&a.overlap)
            .then(a.rank.cmp(&b.rank))
            .then_with(|| a.subject.cmp(&b.subject))
    });
    out
}

/// Ranked sentences joined by single spaces, stopping before the first
/// one that would push the context past the character limit, or after
/// `top_n` statements.
pub fn build_context(req: &ContextRequest, kb: &KnowledgeBase, stopwords: &Stopwords) -> Context {
    let mut context = Context::default();
    let mut length = 0usize;
    for candidate in rank_candidates(&req.query, kb, req.facet_mode, stopwords) {
        if req.top_n.is_some_and(|n| context.used.len() >= n) {
            break;
        }
        let sentence_len = candidate.sentence.chars().count();
        let added = if context.used.is_empty() { sentence_len } else { sentence_len + 1 };
        if length + added > req.char_limit {
            break;
        }
        if !context.text.is_empty() {
            context.text.push(' ');
        }
        context.text.push_str(&candidate.sentence);
        length += added;
        context.used.push(candidate);
    }
    context
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindStats {
    pub subjects: usize,
    pub assertions: usize,
    pub facets: usize,
}

impl std::ops::AddAssign for KindStats {
    fn add_assign(&mut self, rhs: Self) {
        self.subjects += rhs.subjects;
        self.assertions += rhs.assertions;
        self.facets += rhs.facets;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbStats {
    pub kinds: BTreeMap<SubjectKind, KindStats>,
    pub total: KindStats,
}

/// Subject, assertion and facet counts per subject kind and in total.
pub fn kb_stats(kb: &KnowledgeBase) -> KbStats {
    let mut stats = KbStats::default();
    for kind in SubjectKind::ALL {
        stats.kinds.insert(kind, KindStats::default());
    }
    for subject in kb.subjects() {
        let assertions = kb.assertions_of(&subject.name);
        let s = KindStats {
            subjects: 1,
            assertions: assertions.len(),
            facets: assertions.iter().map(|a| a.facets.len()).sum(),
        };
        *stats.kinds.entry(subject.kind).or_default() += s;
        stats.total += s;
    }
    stats
}
