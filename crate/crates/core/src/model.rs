//! Knowledge representation: faceted assertions, subjects and the KB container.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// The eight semantic roles a facet can take.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FacetKey {
    Degree,
    Location,
    Temporal,
    OtherQuality,
    Cause,
    Manner,
    Purpose,
    TransitiveObject,
}

impl FacetKey {
    pub const ALL: [FacetKey; 8] = [
        FacetKey::Degree,
        FacetKey::Location,
        FacetKey::Temporal,
        FacetKey::OtherQuality,
        FacetKey::Cause,
        FacetKey::Manner,
        FacetKey::Purpose,
        FacetKey::TransitiveObject,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FacetKey::Degree => "degree",
            FacetKey::Location => "location",
            FacetKey::Temporal => "temporal",
            FacetKey::OtherQuality => "other-quality",
            FacetKey::Cause => "cause",
            FacetKey::Manner => "manner",
            FacetKey::Purpose => "purpose",
            FacetKey::TransitiveObject => "transitive-object",
        }
    }

    /// True for the keys that restrict when or where an assertion holds;
    /// false for the keys that add context (cause, manner, purpose, object).
    pub fn qualifies_validity(self) -> bool {
        matches!(
            self,
            FacetKey::Degree | FacetKey::Location | FacetKey::Temporal | FacetKey::OtherQuality
        )
    }
}

impl fmt::Display for FacetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FacetKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FacetKey::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownFacetKey(s.to_string()))
    }
}

impl Serialize for FacetKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for FacetKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A typed qualifier attached to an assertion.
///
/// `head` and `head_pos` carry the lemma and universal POS tag of the
/// phrase's syntactic head when known; facet value clustering uses them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facet {
    pub key: FacetKey,
    pub value: String,
    pub frequency: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_pos: Option<String>,
}

impl Facet {
    pub fn new(key: FacetKey, value: impl Into<String>) -> Self {
        Facet {
            key,
            value: value.into(),
            frequency: 1,
            head: None,
            head_pos: None,
        }
    }

    pub fn with_frequency(mut self, frequency: u32) -> Self {
        self.frequency = frequency;
        self
    }

    pub fn with_head(mut self, head: impl Into<String>, pos: impl Into<String>) -> Self {
        self.head = Some(head.into());
        self.head_pos = Some(pos.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.value.trim().is_empty() {
            return Err(Error::KbInvariant("facet value is empty".into()));
        }
        if self.frequency == 0 {
            return Err(Error::KbInvariant(format!(
                "facet `{}` has zero frequency",
                self.value
            )));
        }
        Ok(())
    }
}

/// A subject-predicate-object assertion qualified by semantic facets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FacetedAssertion {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub facets: Vec<Facet>,
    pub surface_subject: Option<String>,
    pub surface_predicate: Option<String>,
    pub surface_object: Option<String>,
    pub frequency: u32,
    pub source_doc_ids: BTreeSet<String>,
}

impl FacetedAssertion {
    pub fn new(
        subject: impl Into<String>,
        predicate: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        FacetedAssertion {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
            facets: Vec::new(),
            surface_subject: None,
            surface_predicate: None,
            surface_object: None,
            frequency: 1,
            source_doc_ids: BTreeSet::new(),
        }
    }

    pub fn with_facet(mut self, facet: Facet) -> Self {
        self.facets.push(facet);
        self
    }

    pub fn with_frequency(mut self, frequency: u32) -> Self {
        self.frequency = frequency;
        self
    }

    pub fn with_surface(
        mut self,
        subject: impl Into<String>,
        predicate: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        self.surface_subject = Some(subject.into());
        self.surface_predicate = Some(predicate.into());
        self.surface_object = Some(object.into());
        self
    }

    pub fn with_source(mut self, doc_id: impl Into<String>) -> Self {
        self.source_doc_ids.insert(doc_id.into());
        self
    }

    /// The facet with the highest frequency; the earliest one wins ties.
    pub fn top_facet(&self) -> Option<&Facet> {
        self.facets
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.frequency.cmp(&b.frequency).then(j.cmp(i)))
            .map(|(_, f)| f)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("subject", &self.subject),
            ("predicate", &self.predicate),
            ("object", &self.object),
        ] {
            if value.trim().is_empty() {
                return Err(Error::KbInvariant(format!("assertion has empty {name}")));
            }
        }
        if self.frequency == 0 {
            return Err(Error::KbInvariant(format!(
                "assertion ({}, {}, {}) has zero frequency",
                self.subject, self.predicate, self.object
            )));
        }
        self.facets.iter().try_for_each(Facet::validate)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubjectKind {
    Primary,
    Subgroup,
    Aspect,
}

impl SubjectKind {
    pub const ALL: [SubjectKind; 3] = [SubjectKind::Primary, SubjectKind::Subgroup, SubjectKind::Aspect];

    pub fn as_str(self) -> &'static str {
        match self {
            SubjectKind::Primary => "primary",
            SubjectKind::Subgroup => "subgroup",
            SubjectKind::Aspect => "aspect",
        }
    }
}

impl fmt::Display for SubjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectEntry {
    pub name: String,
    pub kind: SubjectKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub support: u32,
}

/// Longest subgroup name, in words, that is still accepted.
pub const MAX_SUBGROUP_WORDS: usize = 4;

impl SubjectEntry {
    pub fn primary(name: impl Into<String>, support: u32) -> Self {
        SubjectEntry {
            name: name.into(),
            kind: SubjectKind::Primary,
            parent: None,
            support,
        }
    }

    pub fn subgroup(name: impl Into<String>, parent: impl Into<String>, support: u32) -> Self {
        SubjectEntry {
            name: name.into(),
            kind: SubjectKind::Subgroup,
            parent: Some(parent.into()),
            support,
        }
    }

    pub fn aspect(name: impl Into<String>, parent: impl Into<String>, support: u32) -> Self {
        SubjectEntry {
            name: name.into(),
            kind: SubjectKind::Aspect,
            parent: Some(parent.into()),
            support,
        }
    }

    /// Checks the structural invariants. `min_support` applies to subgroups
    /// and aspects; primary subjects are given, not discovered.
    pub fn validate(&self, min_support: u32) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::KbInvariant("subject with empty name".into()));
        }
        match (self.kind, &self.parent) {
            (SubjectKind::Primary, None) => Ok(()),
            (SubjectKind::Primary, Some(_)) => Err(Error::KbInvariant(format!(
                "primary subject `{}` has a parent",
                self.name
            ))),
            (_, None) => Err(Error::KbInvariant(format!(
                "{} `{}` has no parent",
                self.kind, self.name
            ))),
            (kind, Some(_)) => {
                if kind == SubjectKind::Subgroup
                    && self.name.split_whitespace().count() > MAX_SUBGROUP_WORDS
                {
                    return Err(Error::KbInvariant(format!(
                        "subgroup `{}` has five or more words",
                        self.name
                    )));
                }
                if self.support < min_support {
                    return Err(Error::KbInvariant(format!(
                        "{} `{}` has support {} below {}",
                        kind, self.name, self.support, min_support
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Subjects and their ranked assertions.
///
/// Each subject's assertion list is kept in KB-rank order: descending
/// frequency, ties in first-seen order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    subjects: BTreeMap<String, SubjectEntry>,
    assertions: BTreeMap<String, Vec<FacetedAssertion>>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_subject(&mut self, entry: SubjectEntry) {
        self.subjects.insert(entry.name.clone(), entry);
    }

    /// Appends an assertion to its subject's list and restores rank order.
    pub fn add_assertion(&mut self, assertion: FacetedAssertion) -> Result<()> {
        if !self.subjects.contains_key(&assertion.subject) {
            return Err(Error::KbInvariant(format!(
                "assertion subject `{}` is not a registered subject",
                assertion.subject
            )));
        }
        let list = self.assertions.entry(assertion.subject.clone()).or_default();
        list.push(assertion);
        // stable: equal frequencies keep insertion order
        list.sort_by(|a, b| b.frequency.cmp(&a.frequency));
        Ok(())
    }

    pub fn subjects(&self) -> impl Iterator<Item = &SubjectEntry> {
        self.subjects.values()
    }

    pub fn subject(&self, name: &str) -> Option<&SubjectEntry> {
        self.subjects.get(name)
    }

    pub fn assertions_of(&self, subject: &str) -> &[FacetedAssertion] {
        self.assertions.get(subject).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All assertions with their KB rank (0-based position in the subject's list).
    pub fn ranked_assertions(&self) -> impl Iterator<Item = (usize, &FacetedAssertion)> {
        self.assertions
            .values()
            .flat_map(|list| list.iter().enumerate())
    }

    pub fn subject_count(&self) -> usize {
        self.subjects.len()
    }

    pub fn assertion_count(&self) -> usize {
        self.assertions.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    /// Merges another KB into this one. Subjects present in both keep the
    /// entry of `self`.
    pub fn extend(&mut self, other: KnowledgeBase) -> Result<()> {
        for (name, entry) in other.subjects {
            self.subjects.entry(name).or_insert(entry);
        }
        for (_, list) in other.assertions {
            for a in list {
                self.add_assertion(a)?;
            }
        }
        Ok(())
    }

    pub fn validate(&self, min_support: u32) -> Result<()> {
        for entry in self.subjects.values() {
            entry.validate(min_support)?;
            if let Some(parent) = &entry.parent {
                if !self.subjects.contains_key(parent) {
                    return Err(Error::KbInvariant(format!(
                        "parent `{}` of `{}` is not a subject",
                        parent, entry.name
                    )));
                }
            }
        }
        for (subject, list) in &self.assertions {
            if !self.subjects.contains_key(subject) {
                return Err(Error::KbInvariant(format!(
                    "assertions stored under unknown subject `{subject}`"
                )));
            }
            for pair in list.windows(2) {
                if pair[0].frequency < pair[1].frequency {
                    return Err(Error::KbInvariant(format!(
                        "assertions of `{subject}` are not sorted by frequency"
                    )));
                }
            }
            for a in list {
                if &a.subject != subject {
                    return Err(Error::KbInvariant(format!(
                        "assertion with subject `{}` filed under `{subject}`",
                        a.subject
                    )));
                }
                a.validate()?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn facet_keys_round_trip_and_reject_unknown() {
        for key in FacetKey::ALL {
            assert_eq!(key.as_str().parse::<FacetKey>().unwrap(), key);
        }
        assert!("spatial".parse::<FacetKey>().is_err());
        assert!("Degree".parse::<FacetKey>().is_err());
        assert_eq!(FacetKey::ALL.iter().filter(|k| k.qualifies_validity()).count(), 4);
        assert!(!FacetKey::TransitiveObject.qualifies_validity());
        assert!(FacetKey::OtherQuality.qualifies_validity());
    }

    #[test]
    fn kb_keeps_rank_order_with_first_seen_ties() {
        let mut kb = KnowledgeBase::new();
        kb.add_subject(SubjectEntry::primary("lynx", 3));
        kb.add_assertion(FacetedAssertion::new("lynx", "eat", "hare").with_frequency(2))
            .unwrap();
        kb.add_assertion(FacetedAssertion::new("lynx", "be", "shy").with_frequency(5))
            .unwrap();
        kb.add_assertion(FacetedAssertion::new("lynx", "have", "tuft").with_frequency(2))
            .unwrap();
        let objs: Vec<_> = kb.assertions_of("lynx").iter().map(|a| a.object.as_str()).collect();
        assert_eq!(objs, ["shy", "hare", "tuft"]);
        kb.validate(3).unwrap();
    }

    #[test]
    fn unknown_subject_rejected() {
        let mut kb = KnowledgeBase::new();
        assert!(kb.add_assertion(FacetedAssertion::new("x", "be", "y")).is_err());
    }

    #[test]
    fn subject_entry_invariants() {
        assert!(SubjectEntry::primary("lion", 0).validate(3).is_ok());
        assert!(SubjectEntry::subgroup("male lion", "lion", 2).validate(3).is_err());
        assert!(SubjectEntry::subgroup("big old male african lion", "lion", 9)
            .validate(3)
            .is_err());
        assert!(SubjectEntry::subgroup("old male african lion", "lion", 9)
            .validate(3)
            .is_ok());
        let orphan = SubjectEntry {
            name: "trunk".into(),
            kind: SubjectKind::Aspect,
            parent: None,
            support: 5,
        };
        assert!(orphan.validate(3).is_err());
    }

    #[test]
    fn top_facet_prefers_earliest_on_ties() {
        let a = FacetedAssertion::new("rat", "be", "active")
            .with_facet(Facet::new(FacetKey::Temporal, "at night").with_frequency(2))
            .with_facet(Facet::new(FacetKey::Location, "in sewers").with_frequency(2))
            .with_facet(Facet::new(FacetKey::Degree, "very"));
        assert_eq!(a.top_facet().unwrap().value, "at night");
    }
}
