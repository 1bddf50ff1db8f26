use std::collections::BTreeSet;

use crate::oie::{sorted, FacetOrigin, RawAssertion, RawFacet};
use crate::parse::ParsedSentence;

const SUBJECT_RELS: &[&str] = &["nsubj", "nsubjpass", "csubj", "csubjpass"];
const OBJECT_RELS: &[&str] = &["dobj", "attr", "acomp", "oprd", "ccomp", "iobj", "dative", "nmod", "obj"];
const PREDICATE_RELS: &[&str] = &["aux", "auxpass", "neg", "prt"];
const NON_PREDICATE_RELS: &[&str] = &["amod", "compound", "aux", "auxpass"];
const INHERIT_RELS: &[&str] = &["advcl", "xcomp", "conj"];
const RELATIVE_PRONOUNS: &[&str] = &["who", "which", "that", "whom"];

/// Relations followed when a subject or object head is expanded to its
/// phrase; prepositional modifiers come along with their whole subtree.
const PHRASE_RELS: &[&str] = &[
    "compound", "nummod", "det", "advmod", "amod", "poss", "case", "quantmod", "nmod", "npadvmod",
    "predet", "neg",
];
const SUBTREE_RELS: &[&str] = &["prep"];
const OBJECT_EXTRA_RELS: &[&str] = &["conj", "cc", "punct", "preconj", "appos"];

fn is_predicate(s: &ParsedSentence, i: usize) -> bool {
    let t = s.token(i);
    let verbal = t.upos == "VERB" || (t.upos == "AUX" && !matches!(t.deprel.as_str(), "aux" | "auxpass"));
    verbal && !NON_PREDICATE_RELS.contains(&t.deprel.as_str())
}

/// Phrase around `head`: modifier relations are followed recursively and
/// prepositional modifiers taken whole; `with_coordination` also takes in
/// conjuncts. Punctuation at either edge is trimmed.
pub(crate) fn expand(s: &ParsedSentence, head: usize, with_coordination: bool) -> Vec<usize> {
    let mut out = BTreeSet::new();
    let mut stack = vec![head];
    while let Some(n) = stack.pop() {
        if !out.insert(n) {
            continue;
        }
        for c in s.children(n) {
            let rel = c.deprel.as_str();
            if SUBTREE_RELS.contains(&rel) {
                out.extend(s.subtree(c.i));
            } else if PHRASE_RELS.contains(&rel) || (with_coordination && OBJECT_EXTRA_RELS.contains(&rel)) {
                stack.push(c.i);
            }
        }
    }
    if !with_coordination {
        out.retain(|&i| s.token(i).upos != "PUNCT");
    }
    trim_punct(s, sorted(out))
}

pub(crate) fn trim_punct(s: &ParsedSentence, mut tokens: Vec<usize>) -> Vec<usize> {
    while tokens.first().is_some_and(|&i| s.token(i).upos == "PUNCT") {
        tokens.remove(0);
    }
    while tokens.last().is_some_and(|&i| s.token(i).upos == "PUNCT") {
        tokens.pop();
    }
    tokens
}

/// Subject head and span for predicate `v`, following subject edges, then
/// the noun a relative or participial clause modifies, then the parent
/// predicate of an adverbial clause, open complement or conjoined verb.
fn find_subject(s: &ParsedSentence, v: usize, depth: usize) -> Option<(usize, Vec<usize>)> {
    if depth > s.len() {
        return None;
    }
    let vt = s.token(v);
    if let Some(subj) = s.children_with(v, SUBJECT_RELS).next() {
        let relative = RELATIVE_PRONOUNS.contains(&subj.lemma.to_lowercase().as_str());
        if relative && vt.deprel == "relcl" && vt.head > 0 {
            return Some((vt.head, expand(s, vt.head, false)));
        }
        let span = if subj.deprel.starts_with("csubj") {
            trim_punct(s, sorted(s.subtree(subj.i)))
        } else {
            expand(s, subj.i, false)
        };
        return Some((subj.i, span));
    }
    if matches!(vt.deprel.as_str(), "relcl" | "acl") && vt.head > 0 {
        return Some((vt.head, expand(s, vt.head, false)));
    }
    if INHERIT_RELS.contains(&vt.deprel.as_str()) && vt.head > 0 && is_predicate(s, vt.head) {
        return find_subject(s, vt.head, depth + 1);
    }
    None
}

fn verb_facets(s: &ParsedSentence, v: usize) -> Vec<RawFacet> {
    let mut facets = Vec::new();
    for c in s.children(v) {
        let origin = match c.deprel.as_str() {
            "prep" | "agent" => FacetOrigin::Preposition,
            "dative" if c.upos == "ADP" => FacetOrigin::Preposition,
            "advmod" | "npadvmod" => FacetOrigin::AdverbMod,
            "advcl" | "xcomp" => FacetOrigin::Clausal,
            _ => continue,
        };
        let tokens = trim_punct(s, sorted(s.subtree(c.i)));
        if !tokens.is_empty() {
            facets.push(RawFacet {
                tokens,
                head: c.i,
                origin,
            });
        }
    }
    facets
}

/// Candidate triples for every predicate of the sentence. Each object
/// dependent yields its own assertion; a predicate without one yields a
/// single assertion with an empty object.
pub fn extract_raw(s: &ParsedSentence) -> Vec<RawAssertion> {
    let mut out = Vec::new();
    for v in 1..=s.len() {
        if !is_predicate(s, v) {
            continue;
        }
        let Some((subject_head, subject)) = find_subject(s, v, 0) else {
            continue;
        };
        let mut predicate: Vec<usize> = s.children_with(v, PREDICATE_RELS).map(|t| t.i).collect();
        predicate.push(v);
        predicate.sort_unstable();
        let facets = verb_facets(s, v);

        let objects: Vec<usize> = s
            .children(v)
            .filter(|t| OBJECT_RELS.contains(&t.deprel.as_str()))
            .filter(|t| !(t.deprel == "dative" && t.upos == "ADP"))
            .map(|t| t.i)
            .collect();
        let base = RawAssertion {
            subject,
            subject_head,
            predicate,
            predicate_head: v,
            object: Vec::new(),
            object_head: None,
            facets,
            resolved_subject: None,
        };
        if objects.is_empty() {
            out.push(base);
            continue;
        }
        for o in objects {
            let object = if s.token(o).deprel == "ccomp" {
                trim_punct(s, sorted(s.subtree(o)))
            } else {
                expand(s, o, true)
            };
            out.push(RawAssertion {
                object,
                object_head: Some(o),
                ..base.clone()
            });
        }
    }
    out
}
