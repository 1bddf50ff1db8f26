//! Subgroups and aspects of a primary subject, and routing of extracted
//! assertions to the primary subject, a subgroup or an aspect.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine_similarity, phrase_vector, EmbeddingTable};
use crate::error::{Error, Result};
use crate::facets::{type_facet_heuristic, FacetQuery};
use crate::hac::complete_linkage;
use crate::lexicon::Lexicon;
use crate::model::{Facet, FacetKey, FacetedAssertion, SubjectEntry, MAX_SUBGROUP_WORDS};
use crate::oie::coref::is_pronoun;
use crate::oie::{Extraction, ObjectToken};
use crate::parse::{detokenize, ParsedDocument, Span};

const POSSESSIVE_PRONOUNS: &[&str] = &["their", "its", "his", "her", "our", "my", "your"];
const ASPECT_PREDICATES: &[&str] = &["have", "contain", "be assembled of", "be composed of"];

/// An adjective modifying a chunk or object head, with its adverbs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modifier {
    pub word: String,
    pub adverbs: Vec<String>,
}

/// One noun chunk occurrence with what routing needs to know about it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub doc_id: String,
    /// Normalized like triple subjects: no determiners, punctuation or
    /// possessive markers, head lemmatized, lowercase.
    pub text: String,
    pub head: String,
    pub head_pos: String,
    pub is_named_entity: bool,
    /// Lemma of the possessor, resolved through coreference when it is a
    /// pronoun.
    pub possessor: Option<String>,
    /// Compound modifiers plus the head lemma ("ear tuft").
    pub compound: String,
    pub adjectives: Vec<Modifier>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkOccurrence {
    pub text: String,
    pub count: u32,
    pub is_named_entity: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupCluster {
    pub members: BTreeSet<String>,
    pub representative: String,
    pub support: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpandConfig {
    /// Cosine-distance cut for merging subgroup candidates.
    pub subgroup_threshold: f64,
    /// Minimum summed occurrences of a subgroup cluster or an aspect.
    pub min_support: u32,
}

impl Default for ExpandConfig {
    fn default() -> Self {
        ExpandConfig {
            subgroup_threshold: 0.15,
            min_support: 3,
        }
    }
}

impl ExpandConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.subgroup_threshold) {
            return Err(Error::Config(format!(
                "subgroup threshold {} outside [0, 1]",
                self.subgroup_threshold
            )));
        }
        Ok(())
    }
}

fn resolve_pronoun(doc: &ParsedDocument, sent: usize, i: usize) -> Option<String> {
    let paragraph = doc.sentences[sent].paragraph;
    doc.coref
        .iter()
        .find(|c| c.mentions.iter().any(|m| m.sent == sent && m.span.0 <= i && i <= m.span.1))
        .filter(|c| doc.sentences[c.rep.sent].paragraph == paragraph)
        .map(|c| {
            let s = &doc.sentences[c.rep.sent];
            s.token(s.span_head(c.rep.span)).lemma.to_lowercase()
        })
        .filter(|lemma| !is_pronoun(lemma) && !POSSESSIVE_PRONOUNS.contains(&lemma.as_str()))
}

fn chunk_record(doc: &ParsedDocument, sent: usize, span: Span) -> ChunkRecord {
    let s = &doc.sentences[sent];
    let head = s.span_head(span);
    let in_span = |i: usize| span.0 <= i && i <= span.1;
    let possessive_marker = |i: usize| {
        let t = s.token(i);
        t.deprel == "case" && (t.form == "'s" || t.form == "'")
    };
    let words: Vec<String> = (span.0..=span.1)
        .filter(|&i| {
            let t = s.token(i);
            t.upos != "DET" && t.upos != "PUNCT" && !possessive_marker(i)
        })
        .map(|i| {
            let t = s.token(i);
            if i == head {
                t.lemma.to_lowercase()
            } else {
                t.form.to_lowercase()
            }
        })
        .collect();

    let possessor = s
        .children(head)
        .find(|t| t.deprel == "poss" && in_span(t.i))
        .and_then(|t| {
            if t.upos == "PRON" || POSSESSIVE_PRONOUNS.contains(&t.form.to_lowercase().as_str()) {
                resolve_pronoun(doc, sent, t.i)
            } else {
                Some(t.lemma.to_lowercase())
            }
        });

    let mut compound: Vec<String> = s
        .children(head)
        .filter(|t| t.deprel == "compound" && in_span(t.i))
        .map(|t| t.lemma.to_lowercase())
        .collect();
    compound.push(s.token(head).lemma.to_lowercase());

    let adjectives = s
        .children(head)
        .filter(|t| t.deprel == "amod" && t.upos == "ADJ" && in_span(t.i))
        .map(|adj| Modifier {
            word: adj.form.to_lowercase(),
            adverbs: s
                .children(adj.i)
                .filter(|t| t.deprel == "advmod")
                .map(|t| t.form.to_lowercase())
                .collect(),
        })
        .collect();

    ChunkRecord {
        doc_id: doc.id.clone(),
        text: detokenize(words.iter().map(String::as_str)),
        head: s.token(head).lemma.to_lowercase(),
        head_pos: s.token(head).upos.clone(),
        is_named_entity: doc.is_named_entity(sent, span),
        possessor,
        compound: compound.join(" "),
        adjectives,
    }
}

/// Every noun chunk of every sentence, in document order.
pub fn harvest_chunks(docs: &[ParsedDocument]) -> Vec<ChunkRecord> {
    let mut out = Vec::new();
    for doc in docs {
        for (si, s) in doc.sentences.iter().enumerate() {
            for &span in &s.noun_chunks {
                out.push(chunk_record(doc, si, span));
            }
        }
    }
    out
}

/// Chunk texts with their counts, sorted by text. A text is a named
/// entity if any of its occurrences is.
pub fn chunk_occurrences(records: &[ChunkRecord]) -> Vec<ChunkOccurrence> {
    let mut by_text: BTreeMap<&str, ChunkOccurrence> = BTreeMap::new();
    for r in records {
        let entry = by_text.entry(&r.text).or_insert_with(|| ChunkOccurrence {
            text: r.text.clone(),
            count: 0,
            is_named_entity: false,
        });
        entry.count += 1;
        entry.is_named_entity |= r.is_named_entity;
    }
    by_text.into_values().collect()
}

fn words(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// True when `long` extends `short` on the left by at least one token.
fn is_token_suffix_extension(long: &str, short: &str) -> bool {
    let (l, s) = (words(long), words(short));
    l.len() > s.len() && l.ends_with(&s)
}

fn subgroup_candidate(c: &ChunkOccurrence, s0: &str, lemmas: &BTreeSet<String>, lex: &Lexicon) -> bool {
    let n = words(&c.text).len();
    n <= MAX_SUBGROUP_WORDS
        && !c.is_named_entity
        && lemmas.iter().any(|l| is_token_suffix_extension(&c.text, l))
        && !lex.is_foreign_hyponym(&c.text, s0)
}

/// Subgroup clusters of `s0` among the chunks, most supported first.
///
/// Candidates end with a lemma of `s0`, have at most four words, are not
/// named entities and are not lexicalized compounds outside the concept's
/// hyponym tree. A candidate extending a shorter candidate is folded into
/// the shortest one it extends. The rest are clustered with complete
/// linkage on phrase vectors; clusters never hold an antonym pair. Support
/// is checked after clustering.
pub fn collect_subgroups(
    chunks: &[ChunkOccurrence],
    s0: &str,
    lex: &Lexicon,
    emb: &EmbeddingTable,
    cfg: &ExpandConfig,
) -> Vec<SubgroupCluster> {
    let lemmas = lex.lemmas_of(s0);
    let candidates: Vec<&ChunkOccurrence> = chunks
        .iter()
        .filter(|c| subgroup_candidate(c, s0, &lemmas, lex))
        .collect();

    // base candidate -> absorbed members with counts
    let mut groups: BTreeMap<&str, Vec<(&str, u32)>> = BTreeMap::new();
    for c in &candidates {
        let base = candidates
            .iter()
            .filter(|d| is_token_suffix_extension(&c.text, &d.text))
            .min_by_key(|d| (words(&d.text).len(), d.text.as_str()))
            .map_or(c.text.as_str(), |d| d.text.as_str());
        groups.entry(base).or_default().push((&c.text, c.count));
    }
    let groups: Vec<(&str, Vec<(&str, u32)>)> = groups.into_iter().collect();

    let vectors: Vec<Option<Vec<f32>>> = groups.iter().map(|(base, _)| phrase_vector(base, emb)).collect();
    let distance = |i: usize, j: usize| match (&vectors[i], &vectors[j]) {
        (Some(u), Some(v)) => cosine_similarity(u, v).map_or(1.0, |s| 1.0 - s),
        _ => 1.0,
    };
    let cannot_link = |i: usize, j: usize| {
        groups[i]
            .1
            .iter()
            .any(|(a, _)| groups[j].1.iter().any(|(b, _)| lex.contains_antonym_pair(a, b)))
    };
    let partition = complete_linkage(groups.len(), distance, cfg.subgroup_threshold, cannot_link);

    let mut clusters: Vec<SubgroupCluster> = partition
        .into_iter()
        .map(|part| {
            let members: Vec<(&str, u32)> = part.iter().flat_map(|&g| groups[g].1.iter().copied()).collect();
            let representative = members
                .iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
                .map(|m| m.0.to_string())
                .unwrap_or_default();
            SubgroupCluster {
                members: members.iter().map(|m| m.0.to_string()).collect(),
                representative,
                support: members.iter().map(|m| m.1).sum(),
            }
        })
        .filter(|c| c.support >= cfg.min_support)
        .collect();
    clusters.sort_by(|a, b| b.support.cmp(&a.support).then_with(|| a.representative.cmp(&b.representative)));
    clusters
}

/// Index of the noun heading an object: the root of the object tokens, or
/// the prepositional object when the root is a preposition.
fn object_noun(tokens: &[ObjectToken]) -> Option<usize> {
    let root = tokens.iter().position(|t| t.head.is_none() && !t.in_facet)?;
    let noun = if tokens[root].upos == "ADP" {
        tokens.iter().position(|t| t.head == Some(root) && t.deprel == "pobj")?
    } else {
        root
    };
    matches!(tokens[noun].upos.as_str(), "NOUN" | "PROPN").then_some(noun)
}

fn object_compound(tokens: &[ObjectToken], noun: usize) -> String {
    let mut parts: Vec<String> = tokens
        .iter()
        .filter(|t| t.head == Some(noun) && t.deprel == "compound")
        .map(|t| t.lemma.to_lowercase())
        .collect();
    parts.push(tokens[noun].lemma.to_lowercase());
    parts.join(" ")
}

fn object_adjectives(tokens: &[ObjectToken], noun: usize) -> Vec<Modifier> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.head == Some(noun) && t.deprel == "amod" && t.upos == "ADJ")
        .map(|(ai, adj)| Modifier {
            word: adj.form.to_lowercase(),
            adverbs: tokens
                .iter()
                .filter(|t| t.head == Some(ai) && t.deprel == "advmod")
                .map(|t| t.form.to_lowercase())
                .collect(),
        })
        .collect()
}

fn is_aspect_predicate(e: &Extraction) -> bool {
    ASPECT_PREDICATES.contains(&e.predicate.as_str())
        || (matches!(e.predicate.as_str(), "be assembled" | "be composed") && e.object.starts_with("of "))
}

/// Aspect terms of `s0` with their occurrence counts: heads (with compound
/// modifiers, without adjectives) of chunks possessed by `s0`, and of the
/// objects of having and consisting predicates with `s0` as subject.
pub fn collect_aspects(
    chunks: &[ChunkRecord],
    triples: &[Extraction],
    s0: &str,
    lex: &Lexicon,
) -> BTreeMap<String, u32> {
    let lemmas = lex.lemmas_of(s0);
    let mut out: BTreeMap<String, u32> = BTreeMap::new();
    for c in chunks {
        let owned = c.possessor.as_ref().is_some_and(|p| lemmas.contains(p));
        if owned && c.head_pos == "NOUN" && !lemmas.contains(&c.compound) {
            *out.entry(c.compound.clone()).or_default() += 1;
        }
    }
    for e in triples {
        if !lemmas.contains(&e.subject) || !is_aspect_predicate(e) {
            continue;
        }
        if let Some(noun) = object_noun(&e.object_tokens) {
            let term = object_compound(&e.object_tokens, noun);
            if !lemmas.contains(&term) {
                *out.entry(term).or_default() += 1;
            }
        }
    }
    out
}

/// The aspect a subject names once possessives and the concept itself are
/// stripped ("their trunk", "elephant's trunk", "elephant trunk").
fn subject_aspect<'a>(
    subject: &str,
    lemmas: &BTreeSet<String>,
    aspects: &'a BTreeMap<String, u32>,
) -> Option<&'a str> {
    let mut rest = subject.to_string();
    if let Some((first, tail)) = rest.split_once(' ') {
        if POSSESSIVE_PRONOUNS.contains(&first) {
            rest = tail.to_string();
        }
    }
    for l in lemmas {
        for prefix in [format!("{l}'s "), format!("{l}' "), format!("{l} ")] {
            if let Some(tail) = rest.strip_prefix(&prefix) {
                rest = tail.to_string();
                break;
            }
        }
    }
    aspects.get_key_value(rest.as_str()).map(|(k, _)| k.as_str())
}

impl Extraction {
    /// The extraction as a KB assertion of frequency 1. Facets without a
    /// key get the heuristic one.
    pub fn to_assertion(&self) -> FacetedAssertion {
        let mut a = FacetedAssertion::new(&self.subject, &self.predicate, &self.object)
            .with_surface(&self.surface_subject, &self.surface_predicate, &self.surface_object)
            .with_source(&self.doc_id);
        for f in &self.facets {
            let key = f.key.unwrap_or_else(|| {
                type_facet_heuristic(
                    &FacetQuery::new(&self.subject, &self.predicate, &self.object, &f.value).with_tags(f.tags.clone()),
                )
            });
            a.facets.push(Facet::new(key, &f.value).with_head(&f.head, &f.head_pos));
        }
        a
    }
}

fn adjective_assertions(
    subject: &str,
    adjectives: &[Modifier],
    base_facets: &[Facet],
    doc_id: &str,
) -> Vec<FacetedAssertion> {
    adjectives
        .iter()
        .map(|adj| {
            let mut a = FacetedAssertion::new(subject, "be", &adj.word).with_source(doc_id);
            a.facets = base_facets
                .iter()
                .filter(|f| !adj.adverbs.contains(&f.value))
                .cloned()
                .collect();
            for adv in &adj.adverbs {
                a.facets.push(Facet::new(FacetKey::Degree, adv).with_head(adv, "ADV"));
            }
            a
        })
        .collect()
}

/// Assertions split by the kind of subject they end up describing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Routing {
    pub subjects: Vec<SubjectEntry>,
    pub primary: Vec<FacetedAssertion>,
    pub subgroup: Vec<FacetedAssertion>,
    pub aspect: Vec<FacetedAssertion>,
    pub dropped: usize,
}

impl Routing {
    pub fn routed(&self) -> usize {
        self.primary.len() + self.subgroup.len() + self.aspect.len()
    }

    pub fn into_assertions(self) -> impl Iterator<Item = FacetedAssertion> {
        self.primary.into_iter().chain(self.subgroup).chain(self.aspect)
    }
}

/// Routes every extraction to exactly one subject or drops it.
///
/// In order: a subject naming an aspect goes to that aspect; a subject of
/// the concept whose object is adjectives plus an aspect head becomes
/// `(s0 t, be, adj)` per adjective, with the adjective's adverbs as degree
/// facets; any other subject of the concept goes to the primary subject;
/// a subgroup member goes to its cluster's representative. Possessive
/// chunks with adjectives ("elephant's long trunks") add aspect
/// assertions of their own.
pub fn route_assertions(
    extractions: &[Extraction],
    chunks: &[ChunkRecord],
    s0: &str,
    subgroups: &[SubgroupCluster],
    aspects: &BTreeMap<String, u32>,
    lex: &Lexicon,
) -> Routing {
    let lemmas = lex.lemmas_of(s0);
    let member_of: BTreeMap<&str, &str> = subgroups
        .iter()
        .flat_map(|c| c.members.iter().map(move |m| (m.as_str(), c.representative.as_str())))
        .collect();
    let aspect_by_head = |head: &str, compound: &str| -> Option<&str> {
        if aspects.contains_key(compound) {
            return aspects.get_key_value(compound).map(|(k, _)| k.as_str());
        }
        aspects
            .keys()
            .find(|t| t.rsplit(' ').next() == Some(head))
            .map(String::as_str)
    };
    let aspect_subject = |t: &str| format!("{s0} {t}");

    let mut routing = Routing::default();
    for e in extractions {
        if let Some(t) = subject_aspect(&e.subject, &lemmas, aspects) {
            let mut a = e.to_assertion();
            a.subject = aspect_subject(t);
            routing.aspect.push(a);
            continue;
        }
        if lemmas.contains(&e.subject) {
            let adjectival = object_noun(&e.object_tokens).and_then(|noun| {
                let head = e.object_tokens[noun].lemma.to_lowercase();
                let t = aspect_by_head(&head, &object_compound(&e.object_tokens, noun))?;
                let adjectives = object_adjectives(&e.object_tokens, noun);
                (!adjectives.is_empty()).then_some((t, adjectives))
            });
            if let Some((t, adjectives)) = adjectival {
                let base = e.to_assertion();
                routing
                    .aspect
                    .extend(adjective_assertions(&aspect_subject(t), &adjectives, &base.facets, &e.doc_id));
                continue;
            }
            let mut a = e.to_assertion();
            a.subject = s0.to_string();
            routing.primary.push(a);
            continue;
        }
        if let Some(rep) = member_of.get(e.subject.as_str()) {
            let mut a = e.to_assertion();
            a.subject = rep.to_string();
            routing.subgroup.push(a);
            continue;
        }
        routing.dropped += 1;
    }

    for c in chunks {
        let owned = c.possessor.as_ref().is_some_and(|p| lemmas.contains(p));
        if !owned || c.adjectives.is_empty() {
            continue;
        }
        if let Some(t) = aspect_by_head(&c.head, &c.compound) {
            routing
                .aspect
                .extend(adjective_assertions(&aspect_subject(t), &c.adjectives, &[], &c.doc_id));
        }
    }

    routing.subjects.push(SubjectEntry::primary(s0, routing.primary.len() as u32));
    for c in subgroups {
        routing
            .subjects
            .push(SubjectEntry::subgroup(&c.representative, s0, c.support));
    }
    for (t, &support) in aspects {
        routing.subjects.push(SubjectEntry::aspect(aspect_subject(t), s0, support));
    }
    routing
}

/// Subgroups, aspects and routing for one subject over its documents and
/// typed extractions. Aspects below the support minimum are left out.
pub struct Expansion {
    pub subgroups: Vec<SubgroupCluster>,
    pub aspects: BTreeMap<String, u32>,
    pub routing: Routing,
}

pub fn expand_subject(
    docs: &[ParsedDocument],
    extractions: &[Extraction],
    s0: &str,
    lex: &Lexicon,
    emb: &EmbeddingTable,
    cfg: &ExpandConfig,
) -> Expansion {
    let chunks = harvest_chunks(docs);
    let subgroups = collect_subgroups(&chunk_occurrences(&chunks), s0, lex, emb, cfg);
    let mut aspects = collect_aspects(&chunks, extractions, s0, lex);
    aspects.retain(|_, support| *support >= cfg.min_support);
    let routing = route_assertions(extractions, &chunks, s0, &subgroups, &aspects, lex);
    Expansion {
        subgroups,
        aspects,
        routing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::read_fixture;

    fn occ(text: &str, count: u32) -> ChunkOccurrence {
        ChunkOccurrence {
            text: text.into(),
            count,
            is_named_entity: false,
        }
    }

    #[test]
    fn suffix_extension() {
        assert!(is_token_suffix_extension("old male canadian lynx", "canadian lynx"));
        assert!(!is_token_suffix_extension("canadian lynx", "canadian lynx"));
        assert!(!is_token_suffix_extension("sphinx", "lynx"));
    }

    #[test]
    fn containment_folds_into_shortest() {
        let lex = Lexicon::from_json(r#"{"synsets":[{"id":"lynx.n.01","lemmas":["lynx"]}]}"#).unwrap();
        let emb = EmbeddingTable::new(2);
        let chunks = [
            occ("canadian lynx", 3),
            occ("male canadian lynx", 1),
            occ("old male canadian lynx", 1),
        ];
        let cfg = ExpandConfig::default();
        let got = collect_subgroups(&chunks, "lynx", &lex, &emb, &cfg);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].representative, "canadian lynx");
        assert_eq!(got[0].support, 5);
    }

    #[test]
    fn chunk_record_possessive() {
        let docs = read_fixture(
            "1\tThe\tthe\tDET\t2\tdet
2\telephant\telephant\tNOUN\t6\tposs
3\t's\t's\tPART\t2\tcase
4\tvery\tvery\tADV\t5\tadvmod
5\tlong\tlong\tADJ\t6\tamod
6\ttrunks\ttrunk\tNOUN\t7\tnsubj
7\tswing\tswing\tVERB\t0\tROOT
",
        )
        .unwrap();
        let chunks = harvest_chunks(&docs);
        assert_eq!(chunks.len(), 1);
        let c = &chunks[0];
        assert_eq!(c.text, "elephant very long trunk");
        assert_eq!(c.possessor.as_deref(), Some("elephant"));
        assert_eq!(c.compound, "trunk");
        assert_eq!(
            c.adjectives,
            vec![Modifier {
                word: "long".into(),
                adverbs: vec!["very".into()]
            }]
        );
    }
}
