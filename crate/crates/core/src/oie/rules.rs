//! Rewriting rules applied to raw extractions: conjunction splitting,
//! empty-object repair, example expansion and object adverbs as facets.

use std::collections::BTreeSet;

use crate::oie::{sorted, FacetOrigin, RawAssertion, RawFacet};
use crate::parse::ParsedSentence;

const SPLIT_COORDINATORS: &[&str] = &["and", "or"];
const CONJUNCT_EXCLUDED_RELS: &[&str] = &["conj", "cc", "punct", "preconj"];
const EXAMPLE_CUES: &[&str] = &["like", "including", "include"];

/// `pivot` and its conjuncts inside `scope`, in surface order.
fn conjuncts(s: &ParsedSentence, pivot: usize, scope: &BTreeSet<usize>) -> Vec<usize> {
    let mut out = vec![pivot];
    let mut stack = vec![pivot];
    while let Some(n) = stack.pop() {
        for c in s.children(n) {
            if c.deprel == "conj" && scope.contains(&c.i) {
                out.push(c.i);
                stack.push(c.i);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Coordinating words joining the conjuncts.
fn coordinators<'a>(s: &'a ParsedSentence, conj: &[usize], scope: &BTreeSet<usize>) -> Vec<String> {
    conj.iter()
        .flat_map(|&c| s.children(c))
        .filter(|t| t.deprel == "cc" && scope.contains(&t.i))
        .map(|t| t.lemma.to_lowercase())
        .collect()
}

fn splits(s: &ParsedSentence, conj: &[usize], scope: &BTreeSet<usize>) -> bool {
    if conj.len() < 2 {
        return false;
    }
    let cc = coordinators(s, conj, scope);
    !cc.is_empty() && cc.iter().all(|c| SPLIT_COORDINATORS.contains(&c.as_str()))
}

/// The conjunct's own phrase: its subtree without further conjuncts and
/// coordination material.
fn conjunct_tokens(s: &ParsedSentence, c: usize, scope: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut tokens: BTreeSet<usize> = s.subtree(c).intersection(scope).copied().collect();
    for child in s.children(c) {
        if CONJUNCT_EXCLUDED_RELS.contains(&child.deprel.as_str()) {
            for i in s.subtree(child.i) {
                tokens.remove(&i);
            }
        }
    }
    tokens
}

/// Replaces the coordinated phrase rooted at `pivot` inside `tokens` by
/// one token list per conjunct. `None` when the phrase does not split.
fn split_phrase(s: &ParsedSentence, tokens: &[usize], pivot: usize) -> Option<Vec<(usize, Vec<usize>)>> {
    let scope: BTreeSet<usize> = tokens.iter().copied().collect();
    if !scope.contains(&pivot) {
        return None;
    }
    let conj = conjuncts(s, pivot, &scope);
    if !splits(s, &conj, &scope) {
        return None;
    }
    let pivot_tree = s.subtree(pivot);
    let base: Vec<usize> = tokens.iter().copied().filter(|i| !pivot_tree.contains(i)).collect();
    Some(
        conj.iter()
            .map(|&c| {
                let mut phrase = conjunct_tokens(s, c, &scope);
                phrase.extend(base.iter().copied());
                (c, sorted(phrase))
            })
            .collect(),
    )
}

fn prepositional_object(s: &ParsedSentence, prep: usize) -> Option<usize> {
    s.children(prep).find(|t| t.deprel == "pobj").map(|t| t.i)
}

fn split_facet(s: &ParsedSentence, f: &RawFacet) -> Vec<RawFacet> {
    let pivot = match f.origin {
        FacetOrigin::Preposition => prepositional_object(s, f.head),
        FacetOrigin::AdverbMod => Some(f.head),
        FacetOrigin::Clausal => None,
    };
    let parts = pivot.and_then(|p| split_phrase(s, &f.tokens, p));
    match parts {
        Some(parts) => parts
            .into_iter()
            .map(|(c, tokens)| RawFacet {
                tokens,
                head: if f.origin == FacetOrigin::AdverbMod { c } else { f.head },
                origin: f.origin,
            })
            .collect(),
        None => vec![f.clone()],
    }
}

/// Breaks objects and facet values coordinated by "and" or "or" into one
/// assertion per object conjunct and one facet per facet conjunct. Other
/// coordinators ("but") leave the phrase whole.
pub fn split_conjunctions(a: RawAssertion, s: &ParsedSentence) -> Vec<RawAssertion> {
    let facets: Vec<RawFacet> = a.facets.iter().flat_map(|f| split_facet(s, f)).collect();
    let objects = a.object_head.and_then(|h| split_phrase(s, &a.object, h));
    match objects {
        Some(objects) => objects
            .into_iter()
            .map(|(head, object)| RawAssertion {
                object,
                object_head: Some(head),
                facets: facets.clone(),
                ..a.clone()
            })
            .collect(),
        None => vec![RawAssertion { facets, ..a }],
    }
}

/// Fills an empty object with the nearest prepositional facet after the
/// predicate (by token distance, ties to the earlier facet). Assertions
/// with neither are dropped.
pub fn repair_empty_object(mut a: RawAssertion, s: &ParsedSentence) -> Option<RawAssertion> {
    if a.has_object() {
        return Some(a);
    }
    let pivot = a.predicate_head;
    let (idx, _) = a
        .facets
        .iter()
        .enumerate()
        .filter(|(_, f)| f.origin == FacetOrigin::Preposition && f.head > pivot)
        .min_by_key(|(i, f)| (f.head - pivot, *i))?;
    let facet = a.facets.remove(idx);
    a.object_head = Some(prepositional_object(s, facet.head).unwrap_or(facet.head));
    a.object = facet.tokens;
    Some(a)
}

fn is_example_cue(s: &ParsedSentence, prep: usize, scope: &BTreeSet<usize>) -> bool {
    let t = s.token(prep);
    let lemma = t.lemma.to_lowercase();
    let form = t.form.to_lowercase();
    if EXAMPLE_CUES.contains(&lemma.as_str()) || EXAMPLE_CUES.contains(&form.as_str()) {
        return true;
    }
    lemma == "as"
        && (s.children(prep).any(|c| c.lemma.eq_ignore_ascii_case("such"))
            || (prep > 1 && scope.contains(&(prep - 1)) && s.token(prep - 1).form.eq_ignore_ascii_case("such")))
}

/// Replaces a generic object listing examples ("many animals, such as gnus
/// and antelopes") by one assertion per example.
pub fn expand_examples(a: RawAssertion, s: &ParsedSentence) -> Vec<RawAssertion> {
    let Some(head) = a.object_head else {
        return vec![a];
    };
    let scope: BTreeSet<usize> = a.object.iter().copied().collect();
    let cue = s
        .children(head)
        .filter(|t| t.deprel == "prep" && scope.contains(&t.i))
        .find(|t| is_example_cue(s, t.i, &scope));
    let Some(first) = cue.and_then(|c| prepositional_object(s, c.i)) else {
        return vec![a];
    };
    conjuncts(s, first, &scope)
        .into_iter()
        .map(|example| RawAssertion {
            object: sorted(conjunct_tokens(s, example, &scope)),
            object_head: Some(example),
            ..a.clone()
        })
        .collect()
}

/// Moves adverbs out of the object into facets: adverbs modifying the
/// object head directly, and adverbs of an adjective modifying the head
/// ("extremely good swimmers").
pub fn object_adverb_facets(mut a: RawAssertion, s: &ParsedSentence) -> RawAssertion {
    let Some(head) = a.object_head else {
        return a;
    };
    let scope: BTreeSet<usize> = a.object.iter().copied().collect();
    let mut adverbs: Vec<usize> = s
        .children(head)
        .filter(|t| t.deprel == "advmod" && scope.contains(&t.i))
        .map(|t| t.i)
        .collect();
    for adj in s.children(head).filter(|t| t.deprel == "amod" && scope.contains(&t.i)) {
        adverbs.extend(
            s.children(adj.i)
                .filter(|t| t.deprel == "advmod" && scope.contains(&t.i))
                .map(|t| t.i),
        );
    }
    if adverbs.is_empty() {
        return a;
    }
    let mut moved = BTreeSet::new();
    for adv in adverbs {
        let tokens: Vec<usize> = sorted(s.subtree(adv).intersection(&scope).copied());
        moved.extend(tokens.iter().copied());
        a.facets.push(RawFacet {
            tokens,
            head: adv,
            origin: FacetOrigin::AdverbMod,
        });
    }
    a.object.retain(|i| !moved.contains(i));
    a.facets.sort_by_key(|f| f.tokens.first().copied().unwrap_or(0));
    a
}
