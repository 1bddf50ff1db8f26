use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use crate::discovery::filter::RawDocument;
use crate::error::{Error, Result};

/// Source of candidate documents for a search query.
pub trait Fetcher: Send + Sync {
    /// Ranked results for `query`, at most `limit` of them.
    fn search(&self, query: &str, limit: usize) -> Result<Vec<RawDocument>>;

    /// Looks up a single document by id or URL, e.g. a paired reference
    /// article that did not show up in the search results.
    fn resolve(&self, key: &str) -> Result<Option<RawDocument>>;
}

#[derive(Debug, Default, Deserialize)]
struct MetaFile {
    #[serde(default)]
    title: String,
    #[serde(default)]
    url: Option<String>,
    #[serde(default)]
    rank: Option<u32>,
}

/// A directory of `{id}.txt` bodies with optional `{id}.meta.json`
/// sidecars (`title`, `url`, `rank`). The query is ignored: the directory
/// already holds the results for one subject, ordered by rank then id.
#[derive(Clone, Debug)]
pub struct OfflineCorpus {
    dir: PathBuf,
}

impl OfflineCorpus {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(Error::Fetch(format!("{} is not a directory", dir.display())));
        }
        Ok(OfflineCorpus { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn read_doc(&self, id: &str) -> Result<(Option<u32>, RawDocument)> {
        let body_path = self.dir.join(format!("{id}.txt"));
        let body = fs::read_to_string(&body_path).map_err(|e| Error::io(&body_path, e))?;
        let meta_path = self.dir.join(format!("{id}.meta.json"));
        let meta: MetaFile = if meta_path.exists() {
            let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Fetch(format!("{}: {e}", meta_path.display())))?
        } else {
            MetaFile::default()
        };
        let doc = RawDocument {
            id: id.to_string(),
            url: meta.url,
            title: meta.title,
            body_text: body,
        };
        Ok((meta.rank, doc))
    }

    /// Every document in rank order.
    pub fn documents(&self) -> Result<Vec<RawDocument>> {
        let entries = fs::read_dir(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let mut ids = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&self.dir, e))?;
            let path = entry.path();
            if path.extension().is_some_and(|e| e == "txt") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_string());
                }
            }
        }
        let mut docs = ids
            .iter()
            .map(|id| self.read_doc(id))
            .collect::<Result<Vec<_>>>()?;
        docs.sort_by(|(ra, a), (rb, b)| {
            ra.unwrap_or(u32::MAX)
                .cmp(&rb.unwrap_or(u32::MAX))
                .then_with(|| a.id.cmp(&b.id))
        });
        Ok(docs.into_iter().map(|(_, d)| d).collect())
    }
}

impl Fetcher for OfflineCorpus {
    fn search(&self, _query: &str, limit: usize) -> Result<Vec<RawDocument>> {
        let mut docs = self.documents()?;
        docs.truncate(limit);
        Ok(docs)
    }

    fn resolve(&self, key: &str) -> Result<Option<RawDocument>> {
        let direct = self.dir.join(format!("{key}.txt"));
        if !key.contains(['/', '\\']) && direct.is_file() {
            return self.read_doc(key).map(|(_, d)| Some(d));
        }
        Ok(self
            .documents()?
            .into_iter()
            .find(|d| d.url.as_deref() == Some(key)))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SearchResponse {
    Wrapped { results: Vec<RawDocument> },
    Bare(Vec<RawDocument>),
}

/// Queries a search service over HTTP.
///
/// `GET {endpoint}?q=<query>&count=<limit>` must answer with a JSON array
/// of documents (`id`, `url`, `title`, `body_text`) or an object holding
/// that array under `results`. `GET {endpoint}?id=<key>` resolves a single
/// document; a 404 means unknown.
pub struct HttpFetcher {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpFetcher {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self> {
        let endpoint = endpoint.into();
        url::Url::parse(&endpoint).map_err(|e| Error::Config(format!("endpoint `{endpoint}`: {e}")))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpFetcher { endpoint, agent })
    }

    fn get(&self, params: &[(&str, &str)]) -> Result<Option<String>> {
        let mut req = self.agent.get(&self.endpoint);
        for (k, v) in params {
            req = req.query(*k, *v);
        }
        let mut resp = req.call().map_err(|e| Error::Fetch(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 404 {
            return Ok(None);
        }
        if !(200..300).contains(&status) {
            return Err(Error::Fetch(format!("{} answered HTTP {status}", self.endpoint)));
        }
        resp.body_mut()
            .read_to_string()
            .map(Some)
            .map_err(|e| Error::Fetch(e.to_string()))
    }
}

impl Fetcher for HttpFetcher {
    fn search(&self, query: &str, limit: usize) -> Result<Vec<RawDocument>> {
        let count = limit.to_string();
        let Some(body) = self.get(&[("q", query), ("count", &count)])? else {
            return Ok(Vec::new());
        };
        let mut docs = match serde_json::from_str(&body)
            .map_err(|e| Error::Fetch(format!("bad search response: {e}")))?
        {
            SearchResponse::Wrapped { results } => results,
            SearchResponse::Bare(results) => results,
        };
        docs.truncate(limit);
        Ok(docs)
    }

    fn resolve(&self, key: &str) -> Result<Option<RawDocument>> {
        match self.get(&[("id", key)])? {
            Some(body) => serde_json::from_str(&body)
                .map(Some)
                .map_err(|e| Error::Fetch(format!("bad document response: {e}"))),
            None => Ok(None),
        }
    }
}
