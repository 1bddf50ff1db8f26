use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::FacetKey;
use crate::oie::{FacetOrigin, RawAssertion};
use crate::parse::{detokenize, ParsedSentence, ParsedToken};

const MODALS: &[&str] = &["can", "could", "may", "might", "must", "shall", "should", "will", "would", "ought"];
const ARTICLES: &[&str] = &["a", "an", "the"];

/// One token of the object phrase, kept for aspect routing. Tokens moved
/// into facets are included and flagged.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectToken {
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub deprel: String,
    /// Index of the governor within the object tokens, if it is one of them.
    pub head: Option<usize>,
    #[serde(default)]
    pub in_facet: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawFacetValue {
    pub value: String,
    /// Lemma of the phrase's content head (the prepositional object for
    /// prepositional phrases).
    pub head: String,
    pub head_pos: String,
    pub origin: FacetOrigin,
    /// Universal POS tag of every token of `value`.
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<FacetKey>,
}

/// A normalized triple with untyped (or freshly typed) facet values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub doc_id: String,
    pub subject: String,
    pub subject_head: String,
    pub predicate: String,
    pub object: String,
    #[serde(default)]
    pub object_head: Option<String>,
    #[serde(default)]
    pub object_tokens: Vec<ObjectToken>,
    pub facets: Vec<RawFacetValue>,
    pub surface_subject: String,
    pub surface_predicate: String,
    pub surface_object: String,
}

/// Drops determiners and punctuation, replaces the head by its lemma and
/// lowercases.
pub fn normalize_subject(tokens: &[ParsedToken], head: usize) -> String {
    let words: Vec<String> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.upos != "DET" && t.upos != "PUNCT")
        .map(|(i, t)| {
            if i == head {
                t.lemma.to_lowercase()
            } else {
                t.form.to_lowercase()
            }
        })
        .collect();
    detokenize(words.iter().map(String::as_str))
}

/// Main verb in its base form, modals kept, other auxiliaries dropped and
/// passive auxiliaries collapsed to "be": "has been found in" becomes
/// "be found in", "is performing" becomes "perform".
pub fn normalize_predicate(tokens: &[&ParsedToken], head: usize) -> String {
    let passive = tokens.iter().any(|t| t.deprel == "auxpass");
    let mut words: Vec<String> = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        let lemma = t.lemma.to_lowercase();
        let word = if i == head {
            if passive {
                t.form.to_lowercase()
            } else {
                lemma
            }
        } else {
            match t.deprel.as_str() {
                "neg" => "not".to_string(),
                "auxpass" => "be".to_string(),
                "aux" if MODALS.contains(&lemma.as_str()) => lemma,
                "aux" => continue,
                _ => t.form.to_lowercase(),
            }
        };
        words.push(word);
    }
    words.join(" ")
}

/// Lowercases, collapses whitespace and strips leading articles.
pub fn normalize_object_text(text: &str) -> String {
    let mut words: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
    while words.len() > 1 && ARTICLES.contains(&words[0].as_str()) {
        words.remove(0);
    }
    words.join(" ")
}

fn facet_value_text(s: &ParsedSentence, tokens: &[usize]) -> String {
    let forms: Vec<String> = tokens
        .iter()
        .enumerate()
        .map(|(n, &i)| {
            let t = s.token(i);
            if n == 0 && t.upos != "PROPN" {
                t.form.to_lowercase()
            } else {
                t.form.clone()
            }
        })
        .collect();
    detokenize(forms.iter().map(String::as_str))
}

fn object_tokens(a: &RawAssertion, s: &ParsedSentence) -> Vec<ObjectToken> {
    let Some(head) = a.object_head else {
        return Vec::new();
    };
    let object: BTreeSet<usize> = a.object.iter().copied().collect();
    let moved: BTreeSet<usize> = a
        .facets
        .iter()
        .filter(|f| s.dominates(head, f.head))
        .flat_map(|f| f.tokens.iter().copied())
        .collect();
    let all: Vec<usize> = object.union(&moved).copied().collect();
    all.iter()
        .map(|&i| {
            let t = s.token(i);
            ObjectToken {
                form: t.form.clone(),
                lemma: t.lemma.clone(),
                upos: t.upos.clone(),
                deprel: t.deprel.clone(),
                head: all.iter().position(|&j| j == t.head),
                in_facet: moved.contains(&i),
            }
        })
        .collect()
}

/// Turns a raw assertion into its normalized form. Surface text is kept
/// alongside; tokens moved into facets never appear in the predicate or
/// object.
pub fn normalize(a: &RawAssertion, s: &ParsedSentence, doc_id: &str) -> Extraction {
    let (subject_tokens, subject_head): (Vec<ParsedToken>, usize) = match &a.resolved_subject {
        Some(r) => (r.tokens.clone(), r.head),
        None => (
            a.subject.iter().map(|&i| s.token(i).clone()).collect(),
            a.subject.iter().position(|&i| i == a.subject_head).unwrap_or(0),
        ),
    };
    let predicate_tokens: Vec<&ParsedToken> = a.predicate.iter().map(|&i| s.token(i)).collect();
    let predicate_head = a.predicate.iter().position(|&i| i == a.predicate_head).unwrap_or(0);

    let facets = a
        .facets
        .iter()
        .map(|f| {
            let content = match f.origin {
                FacetOrigin::Preposition => s
                    .children(f.head)
                    .find(|t| t.deprel == "pobj")
                    .map(|t| t.i)
                    .unwrap_or(f.head),
                _ => f.head,
            };
            let head = s.token(content);
            RawFacetValue {
                value: facet_value_text(s, &f.tokens),
                head: head.lemma.to_lowercase(),
                head_pos: head.upos.clone(),
                origin: f.origin,
                tags: f.tokens.iter().map(|&i| s.token(i).upos.clone()).collect(),
                key: None,
            }
        })
        .collect();

    let surface_object = a.object_text(s);
    Extraction {
        doc_id: doc_id.to_string(),
        subject: normalize_subject(&subject_tokens, subject_head),
        subject_head: subject_tokens
            .get(subject_head)
            .map(|t| t.lemma.to_lowercase())
            .unwrap_or_default(),
        predicate: normalize_predicate(&predicate_tokens, predicate_head),
        object: normalize_object_text(&surface_object),
        object_head: a.object_head.map(|h| s.token(h).lemma.to_lowercase()),
        object_tokens: object_tokens(a, s),
        facets,
        surface_subject: a.subject_text(s),
        surface_predicate: a.predicate_text(s),
        surface_object,
    }
}
