//! JSON-lines KB dump: one header record listing the subjects, then one
//! record per assertion in KB-rank order.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Facet, FacetedAssertion, KnowledgeBase, SubjectEntry, SubjectKind};

pub const DUMP_FORMAT: &str = "cskb";
pub const DUMP_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    format: String,
    version: u32,
    subjects: Vec<SubjectEntry>,
}

#[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
struct SurfaceRecord {
    s: Option<String>,
    p: Option<String>,
    o: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssertionRecord {
    subject: String,
    kind: SubjectKind,
    parent: Option<String>,
    predicate: String,
    object: String,
    facets: Vec<Facet>,
    frequency: u32,
    #[serde(default)]
    surface: SurfaceRecord,
    #[serde(default)]
    sources: BTreeSet<String>,
}

pub fn write_kb<W: Write>(kb: &KnowledgeBase, mut out: W) -> Result<()> {
    let header = HeaderRecord {
        format: DUMP_FORMAT.to_string(),
        version: DUMP_VERSION,
        subjects: kb.subjects().cloned().collect(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n").map_err(|e| Error::io("<kb writer>", e))?;
    for entry in kb.subjects() {
        for a in kb.assertions_of(&entry.name) {
            let record = AssertionRecord {
                subject: a.subject.clone(),
                kind: entry.kind,
                parent: entry.parent.clone(),
                predicate: a.predicate.clone(),
                object: a.object.clone(),
                facets: a.facets.clone(),
                frequency: a.frequency,
                surface: SurfaceRecord {
                    s: a.surface_subject.clone(),
                    p: a.surface_predicate.clone(),
                    o: a.surface_object.clone(),
                },
                sources: a.source_doc_ids.clone(),
            };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n").map_err(|e| Error::io("<kb writer>", e))?;
        }
    }
    out.flush().map_err(|e| Error::io("<kb writer>", e))
}

/// Reads a dump. Record numbers in errors are 1-based line numbers.
pub fn read_kb<R: BufRead>(input: R) -> Result<KnowledgeBase> {
    let mut kb = KnowledgeBase::new();
    let mut saw_header = false;
    for (idx, line) in input.lines().enumerate() {
        let record = idx + 1;
        let line = line.map_err(|e| Error::io("<kb reader>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::KbRecord { record, message };
        if !saw_header {
            let header: HeaderRecord =
                serde_json::from_str(&line).map_err(|e| bad(format!("bad header: {e}")))?;
            if header.format != DUMP_FORMAT || header.version != DUMP_VERSION {
                return Err(bad(format!(
                    "unsupported dump {} v{}",
                    header.format, header.version
                )));
            }
            for s in header.subjects {
                kb.add_subject(s);
            }
            saw_header = true;
            continue;
        }
        let r: AssertionRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let entry = kb
            .subject(&r.subject)
            .ok_or_else(|| bad(format!("subject `{}` missing from header", r.subject)))?;
        if entry.kind != r.kind || entry.parent != r.parent {
            return Err(bad(format!(
                "kind/parent of `{}` disagree with header",
                r.subject
            )));
        }
        if let Some(prev) = kb.assertions_of(&r.subject).last() {
            if prev.frequency < r.frequency {
                return Err(bad("assertions not in descending frequency order".into()));
            }
        }
        let assertion = FacetedAssertion {
            subject: r.subject,
            predicate: r.predicate,
            object: r.object,
            facets: r.facets,
            surface_subject: r.surface.s,
            surface_predicate: r.surface.p,
            surface_object: r.surface.o,
            frequency: r.frequency,
            source_doc_ids: r.sources,
        };
        assertion.validate().map_err(|e| bad(e.to_string()))?;
        kb.add_assertion(assertion).map_err(|e| bad(e.to_string()))?;
    }
    if !saw_header {
        return Err(Error::KbRecord {
            record: 1,
            message: "missing header record".into(),
        });
    }
    Ok(kb)
}

pub fn save_kb(kb: &KnowledgeBase, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_kb(kb, BufWriter::new(file))
}

pub fn load_kb(path: impl AsRef<Path>) -> Result<KnowledgeBase> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_kb(BufReader::new(file))
}
