//! Tokenization, stopwords and naive English noun inflection.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("stopwords.txt");

#[derive(Clone, Debug)]
pub struct Stopwords(HashSet<String>);

impl Default for Stopwords {
    fn default() -> Self {
        Stopwords::parse(DEFAULT_STOPWORDS)
    }
}

impl Stopwords {
    pub fn empty() -> Self {
        Stopwords(HashSet::new())
    }

    /// One word per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Stopwords::parse(&text))
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Stopwords(words.into_iter().map(|w| w.as_ref().to_lowercase()).collect())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }
}

/// Lowercased Unicode words; punctuation is dropped by the segmentation.
pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.unicode_words().map(str::to_lowercase)
}

pub fn content_tokens<'a>(
    text: &'a str,
    stopwords: &'a Stopwords,
) -> impl Iterator<Item = String> + 'a {
    tokens(text).filter(move |t| !stopwords.contains(t))
}

/// A multiset of tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bag(BTreeMap<String, u32>);

impl Bag {
    pub fn count(&self, token: &str) -> u32 {
        self.0.get(token).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.values().map(|&c| u64::from(c)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Cosine similarity of the two count vectors; 0 when either bag is empty.
    pub fn cosine(&self, other: &Bag) -> f64 {
        if self.is_empty() || other.is_empty() {
            return 0.0;
        }
        let norm = |b: &Bag| b.0.values().map(|&c| f64::from(c) * f64::from(c)).sum::<f64>().sqrt();
        let dot: f64 = self
            .0
            .iter()
            .map(|(k, &c)| f64::from(c) * f64::from(other.count(k)))
            .sum();
        (dot / (norm(self) * norm(other))).clamp(0.0, 1.0)
    }
}

impl FromIterator<String> for Bag {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        let mut map = BTreeMap::new();
        for t in iter {
            *map.entry(t).or_insert(0) += 1;
        }
        Bag(map)
    }
}

pub fn bag_of_words(text: &str, stopwords: &Stopwords) -> Bag {
    content_tokens(text, stopwords).collect()
}

const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("man", "men"),
    ("woman", "women"),
    ("child", "children"),
    ("person", "people"),
    ("mouse", "mice"),
    ("louse", "lice"),
    ("goose", "geese"),
    ("foot", "feet"),
    ("tooth", "teeth"),
    ("ox", "oxen"),
    ("sheep", "sheep"),
    ("deer", "deer"),
    ("fish", "fish"),
    ("moose", "moose"),
    ("bison", "bison"),
    ("salmon", "salmon"),
    ("trout", "trout"),
    ("lynx", "lynx"),
    ("species", "species"),
    ("series", "series"),
    ("aircraft", "aircraft"),
    ("wolf", "wolves"),
    ("calf", "calves"),
    ("half", "halves"),
    ("knife", "knives"),
    ("leaf", "leaves"),
    ("life", "lives"),
    ("wife", "wives"),
    ("shelf", "shelves"),
    ("thief", "thieves"),
    ("cactus", "cacti"),
    ("fungus", "fungi"),
    ("octopus", "octopuses"),
    ("hippopotamus", "hippopotamuses"),
    ("tuna", "tuna"),
];

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn pluralize_word(word: &str) -> String {
    let lower = word.to_lowercase();
    if let Some((_, plural)) = IRREGULAR_PLURALS.iter().find(|(s, _)| *s == lower) {
        return plural.to_string();
    }
    if ["s", "x", "z", "ch", "sh"].iter().any(|suf| lower.ends_with(suf)) {
        return format!("{word}es");
    }
    let mut chars = lower.chars().rev();
    if let (Some('y'), Some(prev)) = (chars.next(), chars.next()) {
        if !is_vowel(prev) {
            return format!("{}ies", &word[..word.len() - 1]);
        }
    }
    format!("{word}s")
}

/// Plural of a noun phrase: the last word is inflected.
pub fn pluralize(phrase: &str) -> String {
    match phrase.rsplit_once(' ') {
        Some((rest, last)) => format!("{rest} {}", pluralize_word(last)),
        None => pluralize_word(phrase),
    }
}

/// Best-effort singular of a single word, the inverse of `pluralize` on
/// regular nouns and the irregulars table.
pub fn singularize(word: &str) -> String {
    let lower = word.to_lowercase();
    if let Some((singular, _)) = IRREGULAR_PLURALS.iter().find(|(_, p)| *p == lower) {
        return singular.to_string();
    }
    if IRREGULAR_PLURALS.iter().any(|(s, _)| *s == lower) {
        return lower;
    }
    if let Some(stem) = lower.strip_suffix("ies") {
        if stem.len() >= 2 {
            return format!("{stem}y");
        }
    }
    for suf in ["ches", "shes", "sses", "xes", "zes"] {
        if lower.ends_with(suf) {
            return lower[..lower.len() - 2].to_string();
        }
    }
    if lower.ends_with('s') && !lower.ends_with("ss") && !lower.ends_with("us") && lower.len() > 3 {
        return lower[..lower.len() - 1].to_string();
    }
    lower
}

pub fn capitalize_first(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
