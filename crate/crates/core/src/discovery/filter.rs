use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::text::{bag_of_words, Stopwords};

/// A fetched web page or corpus file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default)]
    pub title: String,
    pub body_text: String,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, body: impl Into<String>) -> Self {
        RawDocument {
            id: id.into(),
            url: None,
            title: String::new(),
            body_text: body.into(),
        }
    }

    pub fn with_url(mut self, url: impl Into<String>) -> Self {
        self.url = Some(url.into());
        self
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Maximum cosine distance to the reference article for a document to
    /// be kept.
    pub rho: f64,
    pub max_documents: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            rho: 0.45,
            max_documents: 500,
        }
    }
}

impl FilterConfig {
    pub fn new(rho: f64, max_documents: usize) -> Result<Self> {
        let cfg = FilterConfig { rho, max_documents };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho {} outside [0, 1]", self.rho)));
        }
        if self.max_documents == 0 {
            return Err(Error::Config("max_documents must be at least 1".into()));
        }
        Ok(())
    }
}

// absorbs rounding in 1 - similarity so that distance == rho is kept
const BOUNDARY_EPSILON: f64 = 1e-9;

/// Keep/drop decision for one similarity value.
pub fn within_threshold(similarity: f64, rho: f64) -> bool {
    1.0 - similarity <= rho + BOUNDARY_EPSILON
}

/// Cosine similarity of the two documents' bags of words.
pub fn reference_similarity(doc: &RawDocument, reference: &RawDocument, stopwords: &Stopwords) -> f64 {
    bag_of_words(&doc.body_text, stopwords).cosine(&bag_of_words(&reference.body_text, stopwords))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterEntry {
    pub id: String,
    /// Absent when there was no reference to compare against.
    pub similarity: Option<f64>,
    pub retained: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub reference_id: Option<String>,
    /// Set when no reference article was available and nothing was filtered.
    pub no_reference: bool,
    pub entries: Vec<FilterEntry>,
}

impl FilterReport {
    pub fn retained_count(&self) -> usize {
        self.entries.iter().filter(|e| e.retained).count()
    }

    pub fn retention_rate(&self) -> f64 {
        if self.entries.is_empty() {
            0.0
        } else {
            self.retained_count() as f64 / self.entries.len() as f64
        }
    }
}

/// Keeps the documents whose cosine distance to the reference is at most
/// `rho`, in input order. Documents with an empty body are never kept.
pub fn filter_documents(
    docs: Vec<RawDocument>,
    reference: Option<&RawDocument>,
    cfg: &FilterConfig,
    stopwords: &Stopwords,
) -> (Vec<RawDocument>, FilterReport) {
    let mut report = FilterReport {
        reference_id: reference.map(|r| r.id.clone()),
        no_reference: reference.is_none(),
        entries: Vec::with_capacity(docs.len()),
    };
    if reference.is_none() {
        log::warn!("no reference document; keeping all {} documents", docs.len());
    }
    let reference_bag = reference.map(|r| bag_of_words(&r.body_text, stopwords));
    let mut kept = Vec::new();
    for doc in docs {
        let has_body = !doc.body_text.trim().is_empty();
        let (similarity, retained) = match &reference_bag {
            Some(rb) => {
                let sim = bag_of_words(&doc.body_text, stopwords).cosine(rb);
                (Some(sim), has_body && within_threshold(sim, cfg.rho))
            }
            None => (None, has_body),
        };
        report.entries.push(FilterEntry {
            id: doc.id.clone(),
            similarity,
            retained,
        });
        if retained {
            kept.push(doc);
        }
    }
    (kept, report)
}

/// Picks the encyclopedia article to compare search results against: the
/// article paired with the concept's synset when the pairing resolves,
/// otherwise the first candidate hosted on `encyclopedia_host`.
pub fn select_reference<F>(
    concept: &str,
    lex: &Lexicon,
    candidates: &[RawDocument],
    pairings: &HashMap<String, String>,
    encyclopedia_host: &str,
    resolve: F,
) -> Option<RawDocument>
where
    F: FnOnce(&str) -> Option<RawDocument>,
{
    let paired = lex
        .concept_synset(concept)
        .and_then(|s| pairings.get(&s.id))
        .and_then(|key| {
            candidates
                .iter()
                .find(|d| d.id == *key || d.url.as_deref() == Some(key.as_str()))
                .cloned()
                .or_else(|| resolve(key))
        });
    paired.or_else(|| {
        candidates
            .iter()
            .find(|d| d.url.as_deref().is_some_and(|u| host_matches(u, encyclopedia_host)))
            .cloned()
    })
}

fn host_matches(url: &str, wanted: &str) -> bool {
    let Ok(parsed) = url::Url::parse(url) else {
        return false;
    };
    let Some(host) = parsed.host_str() else {
        return false;
    };
    let wanted = wanted.trim_start_matches('.').to_lowercase();
    let host = host.to_lowercase();
    host == wanted || host.ends_with(&format!(".{wanted}"))
}
