//! Search query generation, document fetching and reference-similarity
//! filtering.

pub mod fetch;
pub mod filter;
pub mod query;

use std::collections::HashMap;

pub use fetch::{Fetcher, HttpFetcher, OfflineCorpus};
pub use filter::{
    filter_documents, reference_similarity, select_reference, within_threshold, FilterConfig,
    FilterEntry, FilterReport, RawDocument,
};
pub use query::{build_query, load_templates, starter_templates, QueryTemplate};

use crate::error::Result;
use crate::lexicon::Lexicon;
use crate::text::Stopwords;

pub struct DiscoveryRequest<'a> {
    pub concept: &'a str,
    pub lexicon: &'a Lexicon,
    pub templates: &'a [QueryTemplate],
    pub pairings: &'a HashMap<String, String>,
    pub encyclopedia_host: &'a str,
    pub filter: &'a FilterConfig,
    pub stopwords: &'a Stopwords,
}

#[derive(Clone, Debug)]
pub struct Discovery {
    pub query: String,
    pub retained: Vec<RawDocument>,
    pub report: FilterReport,
}

/// Runs query generation, retrieval, reference selection and filtering for
/// one concept.
pub fn discover(req: &DiscoveryRequest<'_>, fetcher: &dyn Fetcher) -> Result<Discovery> {
    let query = build_query(req.concept, req.lexicon, req.templates);
    let candidates = fetcher.search(&query, req.filter.max_documents)?;
    let mut resolve_error = None;
    let reference = select_reference(
        req.concept,
        req.lexicon,
        &candidates,
        req.pairings,
        req.encyclopedia_host,
        |key| match fetcher.resolve(key) {
            Ok(doc) => doc,
            Err(e) => {
                resolve_error = Some(e);
                None
            }
        },
    );
    if let Some(e) = resolve_error {
        log::warn!("could not resolve paired article for `{}`: {e}", req.concept);
    }
    let (retained, report) =
        filter_documents(candidates, reference.as_ref(), req.filter, req.stopwords);
    Ok(Discovery {
        query,
        retained,
        report,
    })
}
