use crate::oie::{RawAssertion, ResolvedSubject};
use crate::parse::ParsedDocument;

/// Nominative personal pronouns replaced by their antecedent.
pub const PRONOUNS: &[&str] = &["they", "he", "she", "it", "we"];

pub fn is_pronoun(word: &str) -> bool {
    PRONOUNS.contains(&word.to_lowercase().as_str())
}

/// Replaces pronoun subjects of assertions from sentence `sent` by the
/// representative mention of their coreference chain. Chains are looked
/// up within the sentence's paragraph only; pronouns outside any chain,
/// and chains whose representative is itself a pronoun, are left alone.
pub fn resolve_subjects(
    mut assertions: Vec<RawAssertion>,
    doc: &ParsedDocument,
    sent: usize,
) -> Vec<RawAssertion> {
    let sentence = &doc.sentences[sent];
    for a in &mut assertions {
        if a.resolved_subject.is_some() || !is_pronoun(&sentence.token(a.subject_head).form) {
            continue;
        }
        let chain = doc.coref.iter().find(|c| {
            c.mentions
                .iter()
                .any(|m| m.sent == sent && m.span.0 <= a.subject_head && a.subject_head <= m.span.1)
        });
        let Some(chain) = chain else {
            continue;
        };
        let rep_sentence = &doc.sentences[chain.rep.sent];
        if rep_sentence.paragraph != sentence.paragraph {
            continue;
        }
        let (start, end) = chain.rep.span;
        let head = rep_sentence.span_head(chain.rep.span);
        if is_pronoun(&rep_sentence.token(head).form) {
            continue;
        }
        a.resolved_subject = Some(ResolvedSubject {
            tokens: rep_sentence.tokens[start - 1..end].to_vec(),
            head: head - start,
        });
    }
    assertions
}
