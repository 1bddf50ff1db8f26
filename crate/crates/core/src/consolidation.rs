//! Per-subject grouping of equivalent assertions.
//!
//! Assertions are sorted by frequency, each one is compared by embedding
//! similarity with the assertions after it, the pair scorer rates only the
//! `k` most similar of those, and single-linkage clustering over the
//! resulting sparse distances (absent pairs at 1.0) gives the groups.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{cosine_similarity, phrase_vector, EmbeddingTable};
use crate::error::{Error, Result};
use crate::hac::single_linkage;
use crate::model::{Facet, FacetKey, FacetedAssertion, KnowledgeBase};
use crate::scorer::{EmbeddingPairScorer, PairScorer, PoPair};

pub const EXTERNAL_THRESHOLD: f64 = 0.5;
pub const EMBEDDING_THRESHOLD: f64 = 0.3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConsolidationConfig {
    /// Successors per assertion sent to the pair scorer.
    pub k: usize,
    /// Distance cut for assertion clustering; when unset, 0.5 with an
    /// external scorer and 0.3 with embedding similarity.
    pub threshold: Option<f64>,
    /// Distance cut for clustering adverb facet values.
    pub facet_threshold: f64,
    /// Pairs per scorer request batch.
    pub batch_size: usize,
    /// Cluster with embedding similarity when the external scorer fails.
    pub embedding_fallback: bool,
}

impl Default for ConsolidationConfig {
    fn default() -> Self {
        ConsolidationConfig {
            k: 100,
            threshold: None,
            facet_threshold: 0.3,
            batch_size: 256,
            embedding_fallback: false,
        }
    }
}

impl ConsolidationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        for t in self.threshold.into_iter().chain([self.facet_threshold]) {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Config(format!("threshold {t} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn threshold_for(&self, external: bool) -> f64 {
        self.threshold
            .unwrap_or(if external { EXTERNAL_THRESHOLD } else { EMBEDDING_THRESHOLD })
    }
}

/// Collapses assertions with identical (subject, predicate, object):
/// frequencies add up, facets with equal key and value merge, sources
/// are united. First-seen order is kept.
pub fn merge_duplicates(assertions: Vec<FacetedAssertion>) -> Vec<FacetedAssertion> {
    let mut index: BTreeMap<(String, String, String), usize> = BTreeMap::new();
    let mut out: Vec<FacetedAssertion> = Vec::new();
    for a in assertions {
        let key = (a.subject.clone(), a.predicate.clone(), a.object.clone());
        match index.get(&key) {
            Some(&i) => {
                let target = &mut out[i];
                target.frequency += a.frequency;
                target.source_doc_ids.extend(a.source_doc_ids);
                for f in a.facets {
                    match target.facets.iter_mut().find(|g| g.key == f.key && g.value == f.value) {
                        Some(g) => g.frequency += f.frequency,
                        None => target.facets.push(f),
                    }
                }
            }
            None => {
                index.insert(key, out.len());
                out.push(a);
            }
        }
    }
    out
}

/// Positions of `assertions` in descending frequency, ties by position.
pub fn frequency_order(assertions: &[FacetedAssertion]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..assertions.len()).collect();
    order.sort_by(|&a, &b| assertions[b].frequency.cmp(&assertions[a].frequency).then(a.cmp(&b)));
    order
}

fn po(a: &FacetedAssertion) -> PoPair {
    PoPair::new(&a.predicate, &a.object)
}

/// For each position in `pairs`, the up to `k` later positions with the
/// highest embedding similarity (ties to the earlier position).
pub fn prefilter_windows(pairs: &[PoPair], emb: &EmbeddingTable, k: usize) -> Vec<Vec<usize>> {
    let vectors: Vec<Option<Vec<f32>>> = pairs.iter().map(|p| phrase_vector(&p.phrase(), emb)).collect();
    let sim = |i: usize, j: usize| -> f64 {
        if pairs[i] == pairs[j] {
            return 1.0;
        }
        match (&vectors[i], &vectors[j]) {
            (Some(u), Some(v)) => cosine_similarity(u, v).unwrap_or(0.0),
            _ => 0.0,
        }
    };
    (0..pairs.len())
        .into_par_iter()
        .map(|i| {
            let mut succ: Vec<(f64, usize)> = (i + 1..pairs.len()).map(|j| (sim(i, j), j)).collect();
            succ.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            succ.truncate(k);
            succ.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

/// Groups of input positions; within a group positions follow the
/// frequency order, so the first one is the representative.
pub fn cluster_triples(
    assertions: &[FacetedAssertion],
    emb: &EmbeddingTable,
    scorer: &dyn PairScorer,
    k: usize,
    threshold: f64,
    batch_size: usize,
) -> Result<Vec<Vec<usize>>> {
    let order = frequency_order(assertions);
    let pairs: Vec<PoPair> = order.iter().map(|&i| po(&assertions[i])).collect();
    let windows = prefilter_windows(&pairs, emb, k);
    let candidates: Vec<(usize, usize)> = windows
        .iter()
        .enumerate()
        .flat_map(|(i, w)| w.iter().map(move |&j| (i, j)))
        .collect();
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(candidates.len());
    for chunk in candidates.chunks(batch_size.max(1)) {
        let refs: Vec<(&PoPair, &PoPair)> = chunk.iter().map(|&(i, j)| (&pairs[i], &pairs[j])).collect();
        let scores = scorer.score(&refs)?;
        if scores.len() != chunk.len() {
            return Err(Error::Scorer(format!("{} scores for {} pairs", scores.len(), chunk.len())));
        }
        edges.extend(chunk.iter().zip(scores).map(|(&(i, j), s)| (i, j, 1.0 - s)));
    }
    let groups = single_linkage(order.len(), &edges, threshold);
    Ok(groups
        .into_iter()
        .map(|g| g.into_iter().map(|pos| order[pos]).collect())
        .collect())
}

/// The member with the highest frequency, the earliest one on ties, and
/// the summed frequency of the cluster.
pub fn pick_representative(cluster: &[&FacetedAssertion]) -> Option<(usize, u32)> {
    let best = cluster
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.frequency.cmp(&b.frequency).then(j.cmp(i)))?
        .0;
    Some((best, cluster.iter().map(|a| a.frequency).sum()))
}

fn head_word(f: &Facet) -> String {
    f.head
        .clone()
        .or_else(|| f.value.split_whitespace().last().map(str::to_lowercase))
        .unwrap_or_default()
}

fn is_adverb(f: &Facet) -> bool {
    f.head_pos.as_deref() == Some("ADV")
}

fn representative_facet(group: &[&Facet]) -> Facet {
    let mut best = group[0].clone();
    for f in &group[1..] {
        if f.frequency > best.frequency {
            best = (*f).clone();
        }
    }
    best.frequency = group.iter().map(|f| f.frequency).sum();
    best
}

/// Groups facet values of one key: adverbs by single-linkage clustering on
/// phrase vectors (equal text at distance 0), everything else by head word.
/// Each group becomes its most frequent value carrying the summed count.
/// Output is ordered by frequency, then value.
pub fn cluster_facet_values(values: &[Facet], key: FacetKey, emb: &EmbeddingTable, threshold: f64) -> Vec<Facet> {
    let values: Vec<&Facet> = values.iter().filter(|f| f.key == key).collect();
    let (adverbs, others): (Vec<&Facet>, Vec<&Facet>) = values.iter().partition(|f| is_adverb(f));

    let mut out: Vec<Facet> = Vec::new();
    let vectors: Vec<Option<Vec<f32>>> = adverbs.iter().map(|f| phrase_vector(&f.value, emb)).collect();
    let mut edges = Vec::new();
    for i in 0..adverbs.len() {
        for j in i + 1..adverbs.len() {
            let d = if adverbs[i].value == adverbs[j].value {
                0.0
            } else {
                match (&vectors[i], &vectors[j]) {
                    (Some(u), Some(v)) => cosine_similarity(u, v).map_or(1.0, |s| 1.0 - s),
                    _ => 1.0,
                }
            };
            edges.push((i, j, d));
        }
    }
    for g in single_linkage(adverbs.len(), &edges, threshold) {
        let members: Vec<&Facet> = g.iter().map(|&i| adverbs[i]).collect();
        out.push(representative_facet(&members));
    }

    let mut by_head: Vec<(String, Vec<&Facet>)> = Vec::new();
    for f in others {
        let h = head_word(f);
        match by_head.iter_mut().find(|(k, _)| *k == h) {
            Some((_, g)) => g.push(f),
            None => by_head.push((h, vec![f])),
        }
    }
    out.extend(by_head.iter().map(|(_, g)| representative_facet(g)));
    out.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.value.cmp(&b.value)));
    out
}

/// Facets of a cluster grouped per key, keys in order of first appearance.
pub fn consolidate_facets(facets: &[Facet], emb: &EmbeddingTable, threshold: f64) -> Vec<Facet> {
    let mut keys: Vec<FacetKey> = Vec::new();
    for f in facets {
        if !keys.contains(&f.key) {
            keys.push(f.key);
        }
    }
    keys.into_iter()
        .flat_map(|k| cluster_facet_values(facets, k, emb, threshold))
        .collect()
}

/// Merges one cluster into a single assertion: the representative's text
/// with the summed frequency, pooled facets and all sources.
pub fn merge_cluster(members: &[&FacetedAssertion], emb: &EmbeddingTable, facet_threshold: f64) -> FacetedAssertion {
    let (rep, total) = pick_representative(members).expect("cluster is non-empty");
    let mut out = members[rep].clone();
    out.frequency = total;
    let pooled: Vec<Facet> = members.iter().flat_map(|a| a.facets.iter().cloned()).collect();
    out.facets = consolidate_facets(&pooled, emb, facet_threshold);
    for m in members {
        out.source_doc_ids.extend(m.source_doc_ids.iter().cloned());
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectReport {
    pub subject: String,
    pub input: usize,
    pub distinct: usize,
    pub clusters: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

/// Consolidates the assertions of one subject. With `embedding_fallback`,
/// a failing external scorer is replaced by embedding similarity.
pub fn consolidate_subject(
    assertions: &[FacetedAssertion],
    emb: &EmbeddingTable,
    external: Option<&dyn PairScorer>,
    cfg: &ConsolidationConfig,
) -> Result<(Vec<FacetedAssertion>, SubjectReport)> {
    let merged = merge_duplicates(assertions.to_vec());
    let subject = assertions.first().map(|a| a.subject.clone()).unwrap_or_default();
    if let Some(a) = merged.iter().find(|a| a.subject != subject) {
        return Err(Error::KbInvariant(format!(
            "consolidating `{subject}` but found subject `{}`",
            a.subject
        )));
    }
    let embedding = EmbeddingPairScorer::new(emb);
    let mut fallback = None;
    let groups = match external {
        Some(scorer) => {
            match cluster_triples(&merged, emb, scorer, cfg.k, cfg.threshold_for(true), cfg.batch_size) {
                Ok(g) => g,
                Err(e) if cfg.embedding_fallback => {
                    log::warn!("pair scorer failed for `{subject}`, using embeddings: {e}");
                    fallback = Some(e.to_string());
                    cluster_triples(&merged, emb, &embedding, cfg.k, cfg.threshold_for(false), cfg.batch_size)?
                }
                Err(e) => return Err(e),
            }
        }
        None => cluster_triples(&merged, emb, &embedding, cfg.k, cfg.threshold_for(false), cfg.batch_size)?,
    };
    let out: Vec<FacetedAssertion> = groups
        .iter()
        .map(|g| {
            let members: Vec<&FacetedAssertion> = g.iter().map(|&i| &merged[i]).collect();
            merge_cluster(&members, emb, cfg.facet_threshold)
        })
        .collect();
    let report = SubjectReport {
        subject,
        input: assertions.len(),
        distinct: merged.len(),
        clusters: out.len(),
        fallback,
    };
    Ok((out, report))
}

/// Consolidates every subject of `kb` in parallel.
pub fn consolidate_kb(
    kb: &KnowledgeBase,
    emb: &EmbeddingTable,
    external: Option<&dyn PairScorer>,
    cfg: &ConsolidationConfig,
) -> Result<(KnowledgeBase, Vec<SubjectReport>)> {
    cfg.validate()?;
    let subjects: Vec<_> = kb.subjects().cloned().collect();
    let results: Vec<Result<(Vec<FacetedAssertion>, SubjectReport)>> = subjects
        .par_iter()
        .filter(|s| !kb.assertions_of(&s.name).is_empty())
        .map(|s| consolidate_subject(kb.assertions_of(&s.name), emb, external, cfg))
        .collect();
    let mut out = KnowledgeBase::new();
    for s in subjects {
        out.add_subject(s);
    }
    let mut reports = Vec::new();
    for r in results {
        let (assertions, report) = r?;
        for a in assertions {
            out.add_assertion(a)?;
        }
        reports.push(report);
    }
    Ok((out, reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        EmbeddingTable::parse(
            "6 3\noften 1 0 0\nfrequently 0.95 0.1 0\nrarely 0 1 0\neat 0 0 1\nleaves 0.1 0 1\ngrass 0.2 0.1 1",
        )
        .unwrap()
    }

    #[test]
    fn identical_assertions_cluster() {
        let a = FacetedAssertion::new("x", "do", "often");
        let input = vec![a.clone().with_frequency(2), FacetedAssertion::new("x", "do", "rarely"), a];
        let emb = table();
        let groups = cluster_triples(&input, &emb, &EmbeddingPairScorer::new(&emb), 5, 0.3, 10).unwrap();
        assert_eq!(groups, vec![vec![0, 2], vec![1]]);
    }

    #[test]
    fn representative_ties_go_to_earliest() {
        let a = FacetedAssertion::new("x", "p", "a").with_frequency(2);
        let b = FacetedAssertion::new("x", "p", "b").with_frequency(2);
        assert_eq!(pick_representative(&[&a, &b]), Some((0, 4)));
        let c = FacetedAssertion::new("x", "p", "c").with_frequency(3);
        assert_eq!(pick_representative(&[&a, &c]), Some((1, 5)));
    }

    #[test]
    fn facet_values_group_by_head_and_vector() {
        let emb = table();
        let values = vec![
            Facet::new(FacetKey::Temporal, "during evening").with_head("evening", "NOUN"),
            Facet::new(FacetKey::Temporal, "in the evening").with_head("evening", "NOUN").with_frequency(2),
        ];
        let got = cluster_facet_values(&values, FacetKey::Temporal, &emb, 0.3);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].value, "in the evening");
        assert_eq!(got[0].frequency, 3);

        let adverbs = vec![
            Facet::new(FacetKey::Degree, "often").with_head("often", "ADV"),
            Facet::new(FacetKey::Degree, "frequently").with_head("frequently", "ADV"),
            Facet::new(FacetKey::Degree, "rarely").with_head("rarely", "ADV"),
        ];
        let got = cluster_facet_values(&adverbs, FacetKey::Degree, &emb, 0.3);
        let values: Vec<&str> = got.iter().map(|f| f.value.as_str()).collect();
        assert_eq!(values, ["often", "rarely"]);
        assert_eq!(got[0].frequency, 2);
    }

    #[test]
    fn duplicates_merge_facets() {
        let a = FacetedAssertion::new("x", "p", "o").with_facet(Facet::new(FacetKey::Degree, "very"));
        let merged = merge_duplicates(vec![a.clone(), a]);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].frequency, 2);
        assert_eq!(merged[0].facets[0].frequency, 2);
    }
}
