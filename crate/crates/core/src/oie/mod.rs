//! Rule-based open information extraction over dependency trees.
//!
//! A sentence goes through [`extract_raw`], then the four rewriting rules
//! in [`rules`], then pronoun resolution and normalization:
//!
//! ```text
//! extract_raw -> split_conjunctions -> repair_empty_object
//!             -> expand_examples -> object_adverb_facets
//!             -> resolve_subjects -> normalize
//! ```

pub mod coref;
pub mod extract;
pub mod normalize;
pub mod rules;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::parse::{ParsedDocument, ParsedSentence, ParsedToken};

pub use coref::{resolve_subjects, PRONOUNS};
pub use extract::extract_raw;
pub use normalize::{normalize, normalize_object_text, normalize_predicate, Extraction, ObjectToken, RawFacetValue};
pub use rules::{expand_examples, object_adverb_facets, repair_empty_object, split_conjunctions};

/// The syntactic relation a facet was attached by.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FacetOrigin {
    AdverbMod,
    Preposition,
    Clausal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawFacet {
    /// Sorted token positions.
    pub tokens: Vec<usize>,
    /// The token the facet phrase hangs from (preposition, adverb or verb).
    pub head: usize,
    pub origin: FacetOrigin,
}

/// A pronoun subject replaced by its coreference representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedSubject {
    pub tokens: Vec<ParsedToken>,
    /// Position of the head within `tokens`.
    pub head: usize,
}

/// A triple as token positions in one sentence, before normalization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawAssertion {
    pub subject: Vec<usize>,
    pub subject_head: usize,
    pub predicate: Vec<usize>,
    pub predicate_head: usize,
    /// Empty until a rule fills it in.
    pub object: Vec<usize>,
    pub object_head: Option<usize>,
    pub facets: Vec<RawFacet>,
    pub resolved_subject: Option<ResolvedSubject>,
}

impl RawAssertion {
    pub fn has_object(&self) -> bool {
        !self.object.is_empty()
    }

    pub fn subject_text(&self, s: &ParsedSentence) -> String {
        match &self.resolved_subject {
            Some(r) => crate::parse::detokenize(r.tokens.iter().map(|t| t.form.as_str())),
            None => s.text(self.subject.iter().copied()),
        }
    }

    pub fn predicate_text(&self, s: &ParsedSentence) -> String {
        s.text(self.predicate.iter().copied())
    }

    pub fn object_text(&self, s: &ParsedSentence) -> String {
        s.text(self.object.iter().copied())
    }

    pub fn facet_texts(&self, s: &ParsedSentence) -> Vec<String> {
        self.facets.iter().map(|f| s.text(f.tokens.iter().copied())).collect()
    }

    /// `(subject; predicate; object)` plus facet values, as surface text.
    pub fn render(&self, s: &ParsedSentence) -> (String, String, String, Vec<String>) {
        (
            self.subject_text(s),
            self.predicate_text(s),
            self.object_text(s),
            self.facet_texts(s),
        )
    }
}

pub(crate) fn sorted(set: impl IntoIterator<Item = usize>) -> Vec<usize> {
    set.into_iter().collect::<BTreeSet<_>>().into_iter().collect()
}

/// Extraction and the four rewriting rules for one sentence, in order.
pub fn extract_sentence(sentence: &ParsedSentence) -> Vec<RawAssertion> {
    extract_raw(sentence)
        .into_iter()
        .flat_map(|a| split_conjunctions(a, sentence))
        .filter_map(|a| repair_empty_object(a, sentence))
        .flat_map(|a| expand_examples(a, sentence))
        .map(|a| object_adverb_facets(a, sentence))
        .collect()
}

/// Runs the whole chain over a document and normalizes the results.
pub fn extract_document(doc: &ParsedDocument) -> Vec<Extraction> {
    let mut out = Vec::new();
    for (si, sentence) in doc.sentences.iter().enumerate() {
        let raw = resolve_subjects(extract_sentence(sentence), doc, si);
        out.extend(raw.iter().map(|a| normalize(a, sentence, &doc.id)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::read_fixture;

    type Rendered = (String, String, String, Vec<String>);

    fn run(conll: &str) -> Vec<Rendered> {
        let docs = read_fixture(conll).unwrap();
        let s = &docs[0].sentences[0];
        extract_sentence(s).iter().map(|a| a.render(s)).collect()
    }

    fn triple(s: &str, p: &str, o: &str, facets: &[&str]) -> Rendered {
        (s.into(), p.into(), o.into(), facets.iter().map(|f| f.to_string()).collect())
    }

    #[test]
    fn gold_sentences() {
        let docs = read_fixture(include_str!("../../tests/fixtures/table1.conll")).unwrap();
        let got: Vec<Vec<Rendered>> = docs
            .iter()
            .map(|d| {
                let s = &d.sentences[0];
                extract_sentence(s).iter().map(|a| a.render(s)).collect()
            })
            .collect();
        assert_eq!(
            got[0],
            vec![
                triple("They", "eat", "ptarmigans", &[]),
                triple("They", "eat", "voles", &[]),
                triple("They", "eat", "grouse", &[]),
            ]
        );
        assert_eq!(got[1], vec![triple("Lynx", "are", "active", &["during evening", "during early morning"])]);
        assert_eq!(got[2], vec![triple("Lions", "live", "for 20 years", &["in captivity"])]);
        assert_eq!(
            got[3],
            vec![triple("Lions", "hunt", "gnus", &[]), triple("Lions", "hunt", "antelopes", &[])]
        );
        assert_eq!(got[4], vec![triple("Dogs", "are", "smart", &["extremely"])]);
        assert_eq!(got[5], vec![triple("Elephants", "are", "good swimmers", &["extremely"])]);
    }

    #[test]
    fn verbless_fragment_yields_nothing() {
        let out = run("1\tBig\tbig\tADJ\t3\tamod\n2\tgray\tgray\tADJ\t3\tamod\n3\telephants\telephant\tNOUN\t0\tROOT\n4\t.\t.\tPUNCT\t3\tpunct\n");
        assert!(out.is_empty());
    }

    #[test]
    fn but_coordination_is_kept_whole() {
        let out = run("1\tCats\tcat\tNOUN\t2\tnsubj
2\tare\tbe\tAUX\t0\tROOT
3\tsmall\tsmall\tADJ\t2\tacomp
4\tbut\tbut\tCCONJ\t3\tcc
5\tstrong\tstrong\tADJ\t3\tconj
");
        assert_eq!(out, vec![triple("Cats", "are", "small but strong", &[])]);
    }

    #[test]
    fn like_introduces_examples() {
        let out = run("1\tBirds\tbird\tNOUN\t2\tnsubj
2\teat\teat\tVERB\t0\tROOT
3\tinsects\tinsect\tNOUN\t2\tdobj
4\tlike\tlike\tADP\t3\tprep
5\tants\tant\tNOUN\t4\tpobj
");
        assert_eq!(out, vec![triple("Birds", "eat", "ants", &[])]);
    }

    #[test]
    fn objectless_without_preposition_is_dropped() {
        let out = run("1\tLions\tlion\tNOUN\t2\tnsubj\n2\tsleep\tsleep\tVERB\t0\tROOT\n3\tmostly\tmostly\tADV\t2\tadvmod\n");
        assert!(out.is_empty());
    }

    #[test]
    fn pronoun_subject_resolved_within_paragraph() {
        let conll = "# doc = d
1\tThe\tthe\tDET\t2\tdet
2\telephants\telephant\tNOUN\t3\tnsubj
3\tlive\tlive\tVERB\t0\tROOT
4\tin\tin\tADP\t3\tprep
5\therds\therd\tNOUN\t4\tpobj

1\tThey\tthey\tPRON\t2\tnsubj
2\thave\thave\tVERB\t0\tROOT
3\tlong\tlong\tADJ\t4\tamod
4\ttrunks\ttrunk\tNOUN\t2\tdobj

# coref = 0:1-2 | 1:1
";
        let docs = read_fixture(conll).unwrap();
        let ex = extract_document(&docs[0]);
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[1].surface_subject, "The elephants");
        assert_eq!(ex[1].subject, "elephant");
        assert_eq!(ex[1].predicate, "have");
        assert_eq!(ex[1].object, "long trunks");
    }

    #[test]
    fn unchained_pronoun_unchanged() {
        let docs = read_fixture("1\tIt\tit\tPRON\t2\tnsubj\n2\tis\tbe\tAUX\t0\tROOT\n3\tnice\tnice\tADJ\t2\tacomp\n").unwrap();
        let ex = extract_document(&docs[0]);
        assert_eq!(ex[0].subject, "it");
    }

    #[test]
    fn object_adverb_tokens_leave_the_object() {
        let docs = read_fixture(include_str!("../../tests/fixtures/table1.conll")).unwrap();
        let ex = extract_document(&docs[5]);
        assert_eq!(ex[0].object, "good swimmers");
        assert_eq!(ex[0].facets[0].value, "extremely");
        let flagged: Vec<_> = ex[0].object_tokens.iter().filter(|t| t.in_facet).map(|t| t.form.as_str()).collect();
        assert_eq!(flagged, ["extremely"]);
        for f in &ex[0].facets {
            assert!(!ex[0].object.split(' ').any(|w| w == f.value));
        }
    }
}
