//! A WordNet-like lexicon: synsets with lemmas, hypernym/hyponym edges and
//! antonym pairs.
//!
//! Lemmas are stored lowercase with multi-word lemmas joined by underscores
//! (`sea_lion`); all lookups accept the space-separated form.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Synset {
    pub id: String,
    /// Lemmas in lexicon order, without duplicates.
    pub lemmas: Vec<String>,
    pub hypernyms: BTreeSet<String>,
    pub hyponyms: BTreeSet<String>,
}

impl Synset {
    /// Lemmas with underscores turned back into spaces.
    pub fn phrases(&self) -> impl Iterator<Item = String> + '_ {
        self.lemmas.iter().map(|l| l.replace('_', " "))
    }
}

#[derive(Clone, Debug, Default)]
pub struct Lexicon {
    synsets: BTreeMap<String, Synset>,
    antonyms: BTreeSet<(String, String)>,
    lemma_index: HashMap<String, BTreeSet<String>>,
}

#[derive(Deserialize)]
struct LexiconFile {
    synsets: Vec<SynsetRecord>,
    #[serde(default)]
    antonyms: Vec<(String, String)>,
}

#[derive(Deserialize)]
struct SynsetRecord {
    id: String,
    lemmas: Vec<String>,
    #[serde(default)]
    hypernyms: Vec<String>,
    #[serde(default)]
    hyponyms: Vec<String>,
}

pub fn lemma_key(phrase: &str) -> String {
    phrase
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
        .to_lowercase()
}

fn ordered_pair(a: &str, b: &str) -> (String, String) {
    let (a, b) = (a.to_lowercase(), b.to_lowercase());
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Lexicon {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: LexiconFile =
            serde_json::from_str(text).map_err(|e| Error::Lexicon(e.to_string()))?;
        let mut synsets = BTreeMap::new();
        for rec in file.synsets {
            if rec.lemmas.is_empty() {
                return Err(Error::Lexicon(format!("synset `{}` has no lemmas", rec.id)));
            }
            let mut lemmas: Vec<String> = Vec::with_capacity(rec.lemmas.len());
            for l in &rec.lemmas {
                let key = lemma_key(l);
                if !lemmas.contains(&key) {
                    lemmas.push(key);
                }
            }
            let synset = Synset {
                lemmas,
                hypernyms: rec.hypernyms.into_iter().collect(),
                hyponyms: rec.hyponyms.into_iter().collect(),
                id: rec.id,
            };
            if synsets.insert(synset.id.clone(), synset).is_some() {
                return Err(Error::Lexicon("duplicate synset id".into()));
            }
        }

        // every edge must point at a known synset; missing reverse edges are filled in
        let mut reverse: Vec<(String, String, bool)> = Vec::new();
        for s in synsets.values() {
            for h in &s.hypernyms {
                reverse.push((h.clone(), s.id.clone(), true));
            }
            for h in &s.hyponyms {
                reverse.push((h.clone(), s.id.clone(), false));
            }
        }
        for (target, source, source_is_hyponym) in reverse {
            let t = synsets.get_mut(&target).ok_or_else(|| {
                Error::Lexicon(format!("`{source}` links to unknown synset `{target}`"))
            })?;
            if source_is_hyponym {
                t.hyponyms.insert(source);
            } else {
                t.hypernyms.insert(source);
            }
        }

        let mut lemma_index: HashMap<String, BTreeSet<String>> = HashMap::new();
        for s in synsets.values() {
            for l in &s.lemmas {
                lemma_index.entry(l.clone()).or_default().insert(s.id.clone());
            }
        }
        let antonyms = file
            .antonyms
            .iter()
            .map(|(a, b)| ordered_pair(a, b))
            .collect();
        Ok(Lexicon {
            synsets,
            antonyms,
            lemma_index,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn synset(&self, id: &str) -> Option<&Synset> {
        self.synsets.get(id)
    }

    pub fn synsets_of(&self, phrase: &str) -> impl Iterator<Item = &Synset> {
        self.lemma_index
            .get(&lemma_key(phrase))
            .into_iter()
            .flatten()
            .filter_map(|id| self.synsets.get(id))
    }

    /// The synset containing `concept` with the most lemmas; ties go to the
    /// smallest id.
    pub fn concept_synset(&self, concept: &str) -> Option<&Synset> {
        // synsets_of iterates ids in ascending order, so keep the first maximum
        self.synsets_of(concept).fold(None, |best: Option<&Synset>, s| match best {
            Some(b) if b.lemmas.len() >= s.lemmas.len() => Some(b),
            _ => Some(s),
        })
    }

    /// The lemma set of the concept's synset plus the concept itself.
    pub fn lemmas_of(&self, concept: &str) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self
            .concept_synset(concept)
            .map(|s| s.phrases().collect())
            .unwrap_or_default();
        out.insert(concept.trim().to_lowercase());
        out
    }

    /// Hypernym closure in breadth-first order, nearest first. Within one
    /// level synsets appear in id order.
    pub fn hypernym_closure(&self, start: &Synset) -> Vec<&Synset> {
        self.closure(start, |s| &s.hypernyms)
    }

    pub fn hyponym_closure(&self, start: &Synset) -> Vec<&Synset> {
        self.closure(start, |s| &s.hyponyms)
    }

    fn closure<'a>(
        &'a self,
        start: &Synset,
        edges: impl Fn(&'a Synset) -> &'a BTreeSet<String>,
    ) -> Vec<&'a Synset> {
        let mut seen = BTreeSet::new();
        seen.insert(start.id.clone());
        let mut queue: VecDeque<&Synset> = VecDeque::new();
        let mut out = Vec::new();
        if let Some(s) = self.synsets.get(&start.id) {
            queue.push_back(s);
        }
        while let Some(s) = queue.pop_front() {
            for id in edges(s) {
                if seen.insert(id.clone()) {
                    if let Some(next) = self.synsets.get(id) {
                        out.push(next);
                        queue.push_back(next);
                    }
                }
            }
        }
        out
    }

    /// True when `chunk` is a lexicalized compound whose senses all lie
    /// outside the hyponym tree of the concept (`sea lion` for `lion`).
    /// Compounds the lexicon does not know are never flagged.
    pub fn is_foreign_hyponym(&self, chunk: &str, concept: &str) -> bool {
        let senses: Vec<&Synset> = self.synsets_of(chunk).collect();
        if senses.is_empty() {
            return false;
        }
        let family: BTreeSet<&str> = match self.concept_synset(concept) {
            Some(root) => std::iter::once(root.id.as_str())
                .chain(self.hyponym_closure(root).into_iter().map(|s| s.id.as_str()))
                .collect(),
            None => BTreeSet::new(),
        };
        senses.iter().all(|s| !family.contains(s.id.as_str()))
    }

    pub fn are_antonyms(&self, a: &str, b: &str) -> bool {
        self.antonyms.contains(&ordered_pair(a, b))
    }

    /// True iff some token of `a` and some token of `b` form an antonym pair.
    pub fn contains_antonym_pair(&self, a: &str, b: &str) -> bool {
        a.split_whitespace()
            .any(|x| b.split_whitespace().any(|y| self.are_antonyms(x, y)))
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }
}
