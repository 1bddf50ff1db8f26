//! Dependency-parsed documents: the JSON-lines corpus format and a compact
//! tab-separated form used for hand-written fixtures.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedToken {
    /// 1-based position in the sentence.
    pub i: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    /// Governor position; 0 for the root.
    pub head: usize,
    pub deprel: String,
    /// Named-entity label, when the token is part of one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ent: Option<String>,
}

/// Inclusive 1-based token range.
pub type Span = (usize, usize);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    #[serde(default)]
    pub paragraph: u32,
    pub tokens: Vec<ParsedToken>,
    #[serde(default)]
    pub noun_chunks: Vec<Span>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionRef {
    /// 0-based sentence index within the document.
    pub sent: usize,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorefChain {
    pub rep: MentionRef,
    pub mentions: Vec<MentionRef>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedDocument {
    pub id: String,
    pub sentences: Vec<ParsedSentence>,
    #[serde(default)]
    pub coref: Vec<CorefChain>,
}

const PUNCT_NO_SPACE: &[&str] = &[",", ".", ";", ":", "!", "?", ")", "%"];

/// Joins token forms with spaces, without a space before closing
/// punctuation and clitics.
pub fn detokenize<'a>(forms: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for form in forms {
        let glue = PUNCT_NO_SPACE.contains(&form)
            || form.starts_with('\'')
            || form.eq_ignore_ascii_case("n't");
        if !out.is_empty() && !glue && !out.ends_with('(') {
            out.push(' ');
        }
        out.push_str(form);
    }
    out
}

impl ParsedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token at a 1-based position.
    pub fn token(&self, i: usize) -> &ParsedToken {
        &self.tokens[i - 1]
    }

    pub fn root(&self) -> Option<usize> {
        self.tokens.iter().find(|t| t.head == 0).map(|t| t.i)
    }

    /// Dependents of `i` in surface order.
    pub fn children(&self, i: usize) -> impl Iterator<Item = &ParsedToken> + '_ {
        self.tokens.iter().filter(move |t| t.head == i && t.i != i)
    }

    pub fn children_with<'a>(
        &'a self,
        i: usize,
        rels: &'a [&'a str],
    ) -> impl Iterator<Item = &'a ParsedToken> + 'a {
        self.children(i).filter(move |t| rels.contains(&t.deprel.as_str()))
    }

    /// `i` and all of its descendants, sorted.
    pub fn subtree(&self, i: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack = vec![i];
        while let Some(n) = stack.pop() {
            if out.insert(n) {
                stack.extend(self.children(n).map(|t| t.i));
            }
        }
        out
    }

    /// True when `ancestor` dominates `i` (or equals it).
    pub fn dominates(&self, ancestor: usize, mut i: usize) -> bool {
        for _ in 0..=self.tokens.len() {
            if i == ancestor {
                return true;
            }
            if i == 0 {
                return false;
            }
            i = self.token(i).head;
        }
        false
    }

    pub fn text<I>(&self, indices: I) -> String
    where
        I: IntoIterator<Item = usize>,
    {
        detokenize(indices.into_iter().map(|i| self.token(i).form.as_str()))
    }

    pub fn span_text(&self, span: Span) -> String {
        self.text(span.0..=span.1)
    }

    /// Syntactic head of a span: the token whose governor lies outside it.
    pub fn span_head(&self, span: Span) -> usize {
        (span.0..=span.1)
            .find(|&i| {
                let h = self.token(i).head;
                h == 0 || h < span.0 || h > span.1
            })
            .unwrap_or(span.1)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let n = self.tokens.len();
        if n == 0 {
            return Err("sentence without tokens".into());
        }
        for (pos, t) in self.tokens.iter().enumerate() {
            if t.i != pos + 1 {
                return Err(format!("token {} found at position {}", t.i, pos + 1));
            }
            if t.head > n {
                return Err(format!("token {} has head {} beyond sentence length {n}", t.i, t.head));
            }
        }
        let roots = self.tokens.iter().filter(|t| t.head == 0).count();
        if roots != 1 {
            return Err(format!("sentence has {roots} roots"));
        }
        for t in &self.tokens {
            if !self.dominates(self.root().unwrap_or(0), t.i) {
                return Err(format!("token {} is not connected to the root", t.i));
            }
        }
        let mut last_end = 0;
        let mut chunks = self.noun_chunks.clone();
        chunks.sort();
        for (s, e) in chunks {
            if s == 0 || s > e || e > n {
                return Err(format!("noun chunk [{s}, {e}] out of bounds"));
            }
            if s <= last_end {
                return Err(format!("noun chunk [{s}, {e}] overlaps another chunk"));
            }
            last_end = e;
        }
        Ok(())
    }
}

const CHUNK_HEAD_DEPS: &[&str] = &[
    "nsubj", "nsubjpass", "dobj", "iobj", "dative", "appos", "attr", "oprd", "pobj", "pcomp", "ROOT",
    "root",
];

/// Noun chunks for a sentence that came without them: every noun or proper
/// noun in an argument position, spanning from the leftmost token of its
/// subtree to the noun itself. Conjoined nouns head their own chunk.
pub fn derive_noun_chunks(sentence: &ParsedSentence) -> Vec<Span> {
    let mut is_head = vec![false; sentence.len() + 1];
    for t in &sentence.tokens {
        let nominal = matches!(t.upos.as_str(), "NOUN" | "PROPN");
        let position = CHUNK_HEAD_DEPS.contains(&t.deprel.as_str())
            || (t.deprel == "conj" && t.head > 0 && is_head[t.head]);
        is_head[t.i] = nominal && position;
    }
    let mut chunks: Vec<Span> = Vec::new();
    for t in &sentence.tokens {
        if !is_head[t.i] {
            continue;
        }
        let mut start = t.i;
        for i in sentence.subtree(t.i) {
            if i < t.i && sentence.token(i).upos != "PUNCT" {
                start = start.min(i);
            }
        }
        // left edge stops at coordination material of an earlier conjunct
        while start < t.i && matches!(sentence.token(start).upos.as_str(), "CCONJ" | "PUNCT") {
            start += 1;
        }
        if chunks.last().is_some_and(|&(_, e)| start <= e) {
            continue;
        }
        chunks.push((start, t.i));
    }
    chunks
}

impl ParsedDocument {
    pub fn validate(&self) -> std::result::Result<(), String> {
        for (si, s) in self.sentences.iter().enumerate() {
            s.validate().map_err(|e| format!("sentence {si}: {e}"))?;
        }
        for (ci, chain) in self.coref.iter().enumerate() {
            let paragraph = |m: &MentionRef| -> std::result::Result<u32, String> {
                let s = self
                    .sentences
                    .get(m.sent)
                    .ok_or_else(|| format!("coref chain {ci}: sentence {} missing", m.sent))?;
                let (a, b) = m.span;
                if a == 0 || a > b || b > s.len() {
                    return Err(format!("coref chain {ci}: span [{a}, {b}] out of bounds"));
                }
                Ok(s.paragraph)
            };
            let p = paragraph(&chain.rep)?;
            for m in &chain.mentions {
                if paragraph(m)? != p {
                    return Err(format!("coref chain {ci} crosses a paragraph boundary"));
                }
            }
        }
        Ok(())
    }

    pub fn mention_text(&self, m: &MentionRef) -> String {
        self.sentences[m.sent].span_text(m.span)
    }

    /// True when the chunk's head carries an entity label or every token is
    /// a proper noun.
    pub fn is_named_entity(&self, sent: usize, span: Span) -> bool {
        let s = &self.sentences[sent];
        let head = s.token(s.span_head(span));
        head.ent.is_some() || (span.0..=span.1).all(|i| s.token(i).upos == "PROPN")
    }
}

pub fn parse_document_line(line: &str, line_no: usize) -> Result<ParsedDocument> {
    let doc: ParsedDocument = serde_json::from_str(line).map_err(|e| Error::Corpus {
        line: line_no,
        message: e.to_string(),
    })?;
    doc.validate().map_err(|message| Error::Corpus {
        line: line_no,
        message,
    })?;
    Ok(doc)
}

/// Reads a parsed corpus, one document per non-blank line.
pub fn read_corpus<R: BufRead>(input: R) -> Result<Vec<ParsedDocument>> {
    let mut docs = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<corpus reader>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        docs.push(parse_document_line(&line, idx + 1)?);
    }
    Ok(docs)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<ParsedDocument>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file))
}

pub fn write_corpus<W: std::io::Write>(docs: &[ParsedDocument], mut out: W) -> Result<()> {
    for d in docs {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n").map_err(|e| Error::io("<corpus writer>", e))?;
    }
    Ok(())
}

fn parse_span(text: &str) -> Option<Span> {
    match text.split_once('-') {
        Some((a, b)) => Some((a.trim().parse().ok()?, b.trim().parse().ok()?)),
        None => {
            let i = text.trim().parse().ok()?;
            Some((i, i))
        }
    }
}

fn parse_mention(text: &str) -> Option<MentionRef> {
    let (sent, span) = text.split_once(':')?;
    Some(MentionRef {
        sent: sent.trim().parse().ok()?,
        span: parse_span(span)?,
    })
}

/// Reads the tab-separated fixture format.
///
/// ```text
/// # doc = d1
/// # paragraph = 0
/// # chunks = 1 3-4
/// 1	They	they	PRON	2	nsubj
/// 2	eat	eat	VERB	0	ROOT
/// ...
///
/// # coref = 0:1-2 | 1:1
/// ```
///
/// Columns are position, form, lemma, UPOS, head, relation and an optional
/// entity label. A blank line ends a sentence. `# coref` lines name the
/// representative mention first (`sentence:span`), then the other mentions.
/// Sentences without `# chunks` get derived noun chunks.
pub fn read_fixture(text: &str) -> Result<Vec<ParsedDocument>> {
    let mut docs: Vec<ParsedDocument> = Vec::new();
    let mut tokens: Vec<ParsedToken> = Vec::new();
    let mut paragraph = 0u32;
    let mut chunks: Option<Vec<Span>> = None;

    fn current(docs: &mut Vec<ParsedDocument>) -> &mut ParsedDocument {
        if docs.is_empty() {
            docs.push(ParsedDocument {
                id: "doc".into(),
                sentences: Vec::new(),
                coref: Vec::new(),
            });
        }
        docs.last_mut().expect("just pushed")
    }

    fn flush(
        docs: &mut Vec<ParsedDocument>,
        tokens: &mut Vec<ParsedToken>,
        paragraph: u32,
        chunks: &mut Option<Vec<Span>>,
    ) {
        if tokens.is_empty() {
            return;
        }
        let mut s = ParsedSentence {
            paragraph,
            tokens: std::mem::take(tokens),
            noun_chunks: Vec::new(),
        };
        s.noun_chunks = chunks.take().unwrap_or_else(|| derive_noun_chunks(&s));
        current(docs).sentences.push(s);
    }

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let bad = |message: String| Error::Corpus {
            line: line_no,
            message,
        };
        let line = raw.trim_end();
        if line.trim().is_empty() {
            flush(&mut docs, &mut tokens, paragraph, &mut chunks);
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let Some((key, value)) = comment.split_once('=') else {
                continue;
            };
            let value = value.trim();
            match key.trim() {
                "doc" => {
                    flush(&mut docs, &mut tokens, paragraph, &mut chunks);
                    docs.push(ParsedDocument {
                        id: value.to_string(),
                        sentences: Vec::new(),
                        coref: Vec::new(),
                    });
                    paragraph = 0;
                }
                "paragraph" => {
                    paragraph = value.parse().map_err(|_| bad(format!("bad paragraph `{value}`")))?
                }
                "chunks" => {
                    let spans = value
                        .split_whitespace()
                        .map(|s| parse_span(s).ok_or_else(|| bad(format!("bad chunk `{s}`"))))
                        .collect::<Result<Vec<_>>>()?;
                    chunks = Some(spans);
                }
                "coref" => {
                    flush(&mut docs, &mut tokens, paragraph, &mut chunks);
                    let (rep, rest) = value.split_once('|').unwrap_or((value, ""));
                    let rep = parse_mention(rep).ok_or_else(|| bad(format!("bad mention `{rep}`")))?;
                    let mentions = rest
                        .split_whitespace()
                        .map(|m| parse_mention(m).ok_or_else(|| bad(format!("bad mention `{m}`"))))
                        .collect::<Result<Vec<_>>>()?;
                    current(&mut docs).coref.push(CorefChain { rep, mentions });
                }
                _ => {}
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() < 6 {
            return Err(bad(format!("expected at least 6 columns, found {}", cols.len())));
        }
        let num = |c: &str, what: &str| -> Result<usize> {
            c.parse().map_err(|_| bad(format!("bad {what} `{c}`")))
        };
        tokens.push(ParsedToken {
            i: num(cols[0], "position")?,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            head: num(cols[4], "head")?,
            deprel: cols[5].to_string(),
            ent: cols.get(6).filter(|e| !e.is_empty() && **e != "_").map(|e| e.to_string()),
        });
    }
    flush(&mut docs, &mut tokens, paragraph, &mut chunks);
    for d in &docs {
        d.validate().map_err(|message| Error::Corpus { line: 0, message: format!("{}: {message}", d.id) })?;
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# doc = d1
1\tThe\tthe\tDET\t2\tdet
2\telephants\telephant\tNOUN\t3\tnsubj
3\thave\thave\tVERB\t0\tROOT
4\tlong\tlong\tADJ\t5\tamod
5\ttrunks\ttrunk\tNOUN\t3\tdobj
6\t.\t.\tPUNCT\t3\tpunct

# paragraph = 0
1\tThey\tthey\tPRON\t2\tnsubj
2\tswim\tswim\tVERB\t0\tROOT
3\twell\twell\tADV\t2\tadvmod

# coref = 0:1-2 | 1:1
";

    #[test]
    fn fixture_reader_builds_documents() {
        let docs = read_fixture(SAMPLE).unwrap();
        assert_eq!(docs.len(), 1);
        let d = &docs[0];
        assert_eq!(d.sentences.len(), 2);
        assert_eq!(d.sentences[0].noun_chunks, vec![(1, 2), (4, 5)]);
        assert_eq!(d.coref[0].rep, MentionRef { sent: 0, span: (1, 2) });
        assert_eq!(d.mention_text(&d.coref[0].rep), "The elephants");
        assert_eq!(d.sentences[0].text(1..=6), "The elephants have long trunks.");
    }

    #[test]
    fn json_round_trip() {
        let docs = read_fixture(SAMPLE).unwrap();
        let mut buf = Vec::new();
        write_corpus(&docs, &mut buf).unwrap();
        assert_eq!(read_corpus(buf.as_slice()).unwrap(), docs);
    }

    #[test]
    fn invalid_trees_rejected() {
        let two_roots = r#"{"id":"x","sentences":[{"tokens":[
            {"i":1,"form":"a","lemma":"a","upos":"X","head":0,"deprel":"ROOT"},
            {"i":2,"form":"b","lemma":"b","upos":"X","head":0,"deprel":"ROOT"}]}]}"#
            .replace('\n', "");
        assert!(matches!(parse_document_line(&two_roots, 7), Err(Error::Corpus { line: 7, .. })));
        let bad_head = r#"{"id":"x","sentences":[{"tokens":[{"i":1,"form":"a","lemma":"a","upos":"X","head":5,"deprel":"ROOT"}]}]}"#;
        assert!(parse_document_line(bad_head, 1).is_err());
    }

    #[test]
    fn coref_must_stay_in_paragraph() {
        let text = "1\tA\ta\tNOUN\t0\tROOT\n\n# paragraph = 1\n1\tit\tit\tPRON\t0\tROOT\n\n# coref = 0:1 | 1:1\n";
        assert!(read_fixture(text).is_err());
    }

    #[test]
    fn possessive_chunk_spans_possessor() {
        let text = "1\tThe\tthe\tDET\t2\tdet
2\telephant\telephant\tNOUN\t6\tposs
3\t's\t's\tPART\t2\tcase
4\tlong\tlong\tADJ\t5\tamod
5\tlong\tlong\tADJ\t6\tamod
6\ttrunks\ttrunk\tNOUN\t7\tnsubj
7\tswing\tswing\tVERB\t0\tROOT
";
        let docs = read_fixture(text).unwrap();
        assert_eq!(docs[0].sentences[0].noun_chunks, vec![(1, 6)]);
        assert_eq!(docs[0].sentences[0].span_text((1, 6)), "The elephant's long long trunks");
    }

    #[test]
    fn named_entities() {
        let text = "1\tWill\tWill\tPROPN\t2\tcompound
2\tSmith\tSmith\tPROPN\t3\tnsubj
3\tacts\tact\tVERB\t0\tROOT
";
        let docs = read_fixture(text).unwrap();
        assert!(docs[0].is_named_entity(0, (1, 2)));
    }
}
