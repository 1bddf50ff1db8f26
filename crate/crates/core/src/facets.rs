//! Facet typing: a rule-based default and an out-of-process classifier.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FacetKey;
use crate::oie::Extraction;
use crate::scorer::ScorerProcess;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetQuery {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub facet: String,
    /// Universal POS tags of the facet tokens, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<Vec<String>>,
}

impl FacetQuery {
    pub fn new(
        subject: impl Into<String>,
        predicate: impl Into<String>,
        object: impl Into<String>,
        facet: impl Into<String>,
    ) -> Self {
        FacetQuery {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
            facet: facet.into(),
            tags: None,
        }
    }

    pub fn with_tags(mut self, tags: Vec<String>) -> Self {
        self.tags = Some(tags);
        self
    }
}

const DEGREE_ADVERBS: &[&str] = &[
    "very", "extremely", "quite", "rather", "too", "so", "mostly", "mainly", "often", "usually",
    "always", "never", "sometimes", "rarely", "seldom", "almost", "nearly", "highly", "fairly",
    "pretty", "really", "much", "well", "also", "generally", "typically", "especially",
];
const TEMPORAL_PREPOSITIONS: &[&str] = &[
    "during", "before", "after", "when", "while", "until", "till", "since", "whenever",
];
const TEMPORAL_NOUNS: &[&str] = &[
    "night", "nights", "nighttime", "morning", "mornings", "evening", "evenings", "afternoon",
    "afternoons", "day", "days", "daytime", "dawn", "dusk", "noon", "midnight", "sunrise", "sunset",
    "week", "weekend", "weekends", "month", "months", "season", "seasons", "winter", "summer",
    "spring", "autumn", "monday", "tuesday", "wednesday", "thursday", "friday", "saturday",
    "sunday", "mondays", "tuesdays", "wednesdays", "thursdays", "fridays", "saturdays", "sundays",
    "hour", "hours", "time", "times", "holiday", "holidays", "breakfast", "lunch", "dinner",
];
const LOCATIVE_PREPOSITIONS: &[&str] = &[
    "in", "on", "at", "near", "inside", "under", "underneath", "around", "across", "along",
    "among", "behind", "beside", "below", "above", "outside", "within", "into", "onto", "over",
    "throughout", "between", "beneath",
];
const NOMINAL_STARTERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our",
    "their", "some", "many", "any", "each", "every", "all", "no", "one", "two", "three",
];
const NOMINAL_TAGS: &[&str] = &["DET", "NOUN", "PROPN", "PRON", "NUM", "ADJ"];
const VERBAL_TAGS: &[&str] = &["VERB", "AUX"];

fn is_adverb(word: &str, tag: Option<&str>) -> bool {
    match tag {
        Some(t) => t == "ADV",
        None => DEGREE_ADVERBS.contains(&word) || (word.len() > 3 && word.ends_with("ly")),
    }
}

/// Whether the token after "to" starts a verb phrase. Tags decide when
/// present; otherwise determiners, possessives and numbers mark a noun
/// phrase and anything else is read as a verb.
fn starts_verb_phrase(word: &str, tag: Option<&str>) -> bool {
    match tag {
        Some(t) if VERBAL_TAGS.contains(&t) => true,
        Some(t) if NOMINAL_TAGS.contains(&t) => false,
        Some(_) => false,
        None => !NOMINAL_STARTERS.contains(&word) && !word.chars().all(|c| c.is_ascii_digit()),
    }
}

/// Deterministic facet key from the phrase's shape. Rules are tried in
/// order and the first match wins.
pub fn type_facet_heuristic(q: &FacetQuery) -> FacetKey {
    let words: Vec<String> = q.facet.split_whitespace().map(str::to_lowercase).collect();
    let tags: Option<&[String]> = q.tags.as_deref().filter(|t| t.len() == words.len());
    let tag = |i: usize| tags.and_then(|t| t.get(i)).map(String::as_str);
    let Some(first) = words.first().map(String::as_str) else {
        return FacetKey::OtherQuality;
    };
    let second = words.get(1).map(String::as_str);

    if words.len() == 1 && is_adverb(first, tag(0)) {
        return FacetKey::Degree;
    }
    if first == "to" && second.is_some_and(|w| starts_verb_phrase(w, tag(1))) {
        return FacetKey::Purpose;
    }
    if words.starts_with(&["in".into(), "order".into(), "to".into()]) || (first == "so" && second == Some("that")) {
        return FacetKey::Purpose;
    }
    if first == "because" || words.starts_with(&["due".into(), "to".into()]) || first == "owing" {
        return FacetKey::Cause;
    }
    if TEMPORAL_PREPOSITIONS.contains(&first) || words.iter().any(|w| TEMPORAL_NOUNS.contains(&w.as_str())) {
        return FacetKey::Temporal;
    }
    if matches!(first, "with" | "by" | "using" | "without") && second.is_some() {
        return FacetKey::Manner;
    }
    if matches!(first, "to" | "for") && second.is_some() {
        return FacetKey::TransitiveObject;
    }
    if LOCATIVE_PREPOSITIONS.contains(&first) && second.is_some() {
        return FacetKey::Location;
    }
    FacetKey::OtherQuality
}

/// Something that assigns facet keys to a batch of queries, one key per
/// query in input order.
pub trait FacetTyper: Send + Sync {
    fn type_batch(&self, batch: &[FacetQuery]) -> Result<Vec<FacetKey>>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct HeuristicTyper;

impl FacetTyper for HeuristicTyper {
    fn type_batch(&self, batch: &[FacetQuery]) -> Result<Vec<FacetKey>> {
        Ok(batch.iter().map(type_facet_heuristic).collect())
    }
}

#[derive(Serialize)]
struct FacetRequest<'a> {
    s: &'a str,
    p: &'a str,
    o: &'a str,
    facet: &'a str,
}

#[derive(Deserialize)]
struct FacetResponse {
    label: String,
}

/// Facet typing by an external classifier process.
pub struct ExternalTyper {
    process: Mutex<ScorerProcess>,
    fallback: bool,
}

impl ExternalTyper {
    /// `fallback` types the queries left unanswered by a timeout with the
    /// heuristic instead of failing the batch.
    pub fn new(process: ScorerProcess, fallback: bool) -> Self {
        ExternalTyper {
            process: Mutex::new(process),
            fallback,
        }
    }
}

impl FacetTyper for ExternalTyper {
    fn type_batch(&self, batch: &[FacetQuery]) -> Result<Vec<FacetKey>> {
        type_facets_external(batch, &mut self.process.lock().expect("scorer lock poisoned"), self.fallback)
    }
}

/// Sends the batch to the scorer and attaches the returned labels.
pub fn type_facets_external(
    batch: &[FacetQuery],
    scorer: &mut ScorerProcess,
    fallback: bool,
) -> Result<Vec<FacetKey>> {
    let requests: Vec<FacetRequest<'_>> = batch
        .iter()
        .map(|q| FacetRequest {
            s: &q.subject,
            p: &q.predicate,
            o: &q.object,
            facet: &q.facet,
        })
        .collect();
    let answers = scorer.exchange::<_, FacetResponse>(&requests)?;
    let mut keys = Vec::with_capacity(batch.len());
    for (q, answer) in batch.iter().zip(answers.responses) {
        match answer {
            Some((line, r)) => {
                let key = r
                    .label
                    .parse::<FacetKey>()
                    .map_err(|_| Error::protocol(line, format!("unknown facet label `{}`", r.label)))?;
                keys.push(key);
            }
            None if fallback => keys.push(type_facet_heuristic(q)),
            None => return Err(answers.timeout.map_or_else(|| Error::Scorer("missing response".into()), Error::ScorerTimeout)),
        }
    }
    Ok(keys)
}

impl Extraction {
    pub fn facet_queries(&self) -> Vec<FacetQuery> {
        self.facets
            .iter()
            .map(|f| {
                FacetQuery::new(&self.subject, &self.predicate, &self.object, &f.value).with_tags(f.tags.clone())
            })
            .collect()
    }
}

/// Types every facet of every extraction, in batches of `batch_size`
/// queries. Facet values are never changed; only keys are attached.
pub fn type_extractions(extractions: &mut [Extraction], typer: &dyn FacetTyper, batch_size: usize) -> Result<()> {
    let mut slots: Vec<(usize, usize)> = Vec::new();
    let mut queries: Vec<FacetQuery> = Vec::new();
    for (ei, e) in extractions.iter().enumerate() {
        for (fi, q) in e.facet_queries().into_iter().enumerate() {
            slots.push((ei, fi));
            queries.push(q);
        }
    }
    for (chunk_slots, chunk) in slots.chunks(batch_size.max(1)).zip(queries.chunks(batch_size.max(1))) {
        let keys = typer.type_batch(chunk)?;
        if keys.len() != chunk.len() {
            return Err(Error::Scorer(format!("{} keys for {} facets", keys.len(), chunk.len())));
        }
        for (&(ei, fi), key) in chunk_slots.iter().zip(keys) {
            extractions[ei].facets[fi].key = Some(key);
        }
    }
    Ok(())
}
