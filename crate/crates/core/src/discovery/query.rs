use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;

const PLACEHOLDER: &str = "{s}";

/// A search query pattern attached to a hypernym synset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TemplateRecord")]
pub struct QueryTemplate {
    #[serde(rename = "hypernym_synset_id")]
    hypernym: String,
    pattern: String,
}

#[derive(Deserialize)]
struct TemplateRecord {
    hypernym_synset_id: String,
    pattern: String,
}

impl TryFrom<TemplateRecord> for QueryTemplate {
    type Error = Error;

    fn try_from(r: TemplateRecord) -> Result<Self> {
        QueryTemplate::new(r.hypernym_synset_id, r.pattern)
    }
}

impl QueryTemplate {
    pub fn new(hypernym: impl Into<String>, pattern: impl Into<String>) -> Result<Self> {
        let pattern = pattern.into();
        if pattern.matches(PLACEHOLDER).count() != 1 {
            return Err(Error::Config(format!(
                "query pattern `{pattern}` must contain {PLACEHOLDER} exactly once"
            )));
        }
        Ok(QueryTemplate {
            hypernym: hypernym.into(),
            pattern,
        })
    }

    pub fn hypernym(&self) -> &str {
        &self.hypernym
    }

    pub fn render(&self, subject: &str) -> String {
        self.pattern.replace(PLACEHOLDER, subject)
    }
}

/// Twelve templates for common hypernyms. Extend or replace them with a
/// template file for other domains.
pub fn starter_templates() -> Vec<QueryTemplate> {
    [
        ("animal.n.01", "{s} animal facts"),
        ("professional.n.01", "{s} job descriptions"),
        ("plant.n.02", "{s} plant facts"),
        ("vehicle.n.01", "{s} vehicle facts"),
        ("food.n.02", "{s} food facts"),
        ("musical_instrument.n.01", "{s} musical instrument"),
        ("device.n.01", "{s} device uses"),
        ("substance.n.01", "{s} substance properties"),
        ("building.n.01", "{s} building facts"),
        ("sport.n.01", "{s} sport rules"),
        ("body_part.n.01", "{s} body part function"),
        ("clothing.n.01", "{s} clothing facts"),
    ]
    .into_iter()
    .map(|(h, p)| QueryTemplate::new(h, p).expect("starter templates are well formed"))
    .collect()
}

pub fn load_templates(path: impl AsRef<Path>) -> Result<Vec<QueryTemplate>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Builds the web search query for a concept.
///
/// The hypernym closure of the concept's synset is walked nearest first and
/// the first synset with a template decides the query. Without a matching
/// template the query is `"<concept> (<direct hypernym>)"`, and a concept the
/// lexicon does not know is searched on its own.
pub fn build_query(concept: &str, lex: &Lexicon, templates: &[QueryTemplate]) -> String {
    let concept = concept.trim();
    let Some(synset) = lex.concept_synset(concept) else {
        return concept.to_string();
    };
    for hyper in lex.hypernym_closure(synset) {
        if let Some(t) = templates.iter().find(|t| t.hypernym == hyper.id) {
            return t.render(concept);
        }
    }
    synset
        .hypernyms
        .iter()
        .find_map(|id| lex.synset(id))
        .and_then(|h| h.phrases().next())
        .map(|lemma| format!("{concept} ({lemma})"))
        .unwrap_or_else(|| concept.to_string())
}
