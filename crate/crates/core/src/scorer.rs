//! Newline-delimited JSON exchange with an external scoring process.
//!
//! Each request is one JSON object with a numeric `id`; the scorer answers
//! every request with one line carrying the same `id`, in any order.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Serialize)]
struct Envelope<'a, T> {
    id: u64,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Deserialize)]
struct Tagged {
    id: u64,
}

/// Answers to one batch, in request order. `None` marks a request left
/// unanswered because the scorer timed out.
pub struct Exchange<R> {
    pub responses: Vec<Option<(String, R)>>,
    pub timeout: Option<Duration>,
}

pub struct ScorerProcess {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    next_id: u64,
}

impl ScorerProcess {
    /// Starts `command`, split with shell quoting rules.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        let argv = shlex::split(command)
            .filter(|a| !a.is_empty())
            .ok_or_else(|| Error::Config(format!("cannot parse scorer command `{command}`")))?;
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Scorer(format!("cannot start `{command}`: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ScorerProcess {
            child,
            stdin,
            lines: rx,
            timeout,
            next_id: 1,
        })
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    fn send<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::Scorer("scorer input already closed".into()))?;
        let mut line = serde_json::to_vec(value)?;
        line.push(b'\n');
        stdin
            .write_all(&line)
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::Scorer(format!("writing to scorer: {e}")))
    }

    fn recv(&mut self, deadline: Instant) -> Result<String> {
        let wait = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(wait) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(Error::Scorer(format!("reading from scorer: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(Error::ScorerTimeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(Error::Scorer("scorer exited".into())),
        }
    }

    /// Sends every request and collects one response per request, matched
    /// by id. Replies to requests of an earlier, timed-out batch are
    /// skipped; any other id is a protocol violation. The whole batch
    /// shares one timeout; on expiry the unanswered slots are `None`.
    pub fn exchange<T: Serialize, R: DeserializeOwned>(&mut self, requests: &[T]) -> Result<Exchange<R>> {
        let first = self.next_id;
        self.next_id += requests.len() as u64;
        for (n, body) in requests.iter().enumerate() {
            self.send(&Envelope {
                id: first + n as u64,
                body,
            })?;
        }
        let mut responses: Vec<Option<(String, R)>> = (0..requests.len()).map(|_| None).collect();
        let mut pending = requests.len();
        let deadline = Instant::now() + self.timeout;
        while pending > 0 {
            let line = match self.recv(deadline) {
                Ok(line) => line,
                Err(Error::ScorerTimeout(d)) => {
                    return Ok(Exchange {
                        responses,
                        timeout: Some(d),
                    })
                }
                Err(e) => return Err(e),
            };
            if line.trim().is_empty() {
                continue;
            }
            let id = match serde_json::from_str::<Tagged>(&line) {
                Ok(t) => t.id,
                Err(e) => return Err(Error::protocol(line, format!("not a response object: {e}"))),
            };
            if id < first {
                log::debug!("skipping late reply {id} from an earlier batch");
                continue;
            }
            let slot = (id - first) as usize;
            if slot >= requests.len() {
                return Err(Error::protocol(line, format!("response id {id} matches no request")));
            }
            if responses[slot].is_some() {
                return Err(Error::protocol(line, format!("duplicate response for id {id}")));
            }
            let body: R = serde_json::from_str(&line)
                .map_err(|e| Error::protocol(line.clone(), format!("malformed response: {e}")))?;
            responses[slot] = Some((line, body));
            pending -= 1;
        }
        Ok(Exchange {
            responses,
            timeout: None,
        })
    }
}

impl Drop for ScorerProcess {
    fn drop(&mut self) {
        // closing stdin lets a well-behaved scorer exit on its own
        self.stdin.take();
        let deadline = Instant::now() + Duration::from_millis(200);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A predicate-object pair.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PoPair {
    pub predicate: String,
    pub object: String,
}

impl PoPair {
    pub fn new(predicate: impl Into<String>, object: impl Into<String>) -> Self {
        PoPair {
            predicate: predicate.into(),
            object: object.into(),
        }
    }

    pub fn phrase(&self) -> String {
        format!("{} {}", self.predicate, self.object)
    }
}

/// Similarity in [0, 1] between two predicate-object pairs, one score per
/// pair in input order.
pub trait PairScorer: Send + Sync {
    fn score(&self, pairs: &[(&PoPair, &PoPair)]) -> Result<Vec<f64>>;
}

/// Cosine of mean word vectors, clamped to [0, 1]; out-of-vocabulary
/// phrases score 0 against everything except an identical phrase.
pub struct EmbeddingPairScorer<'a> {
    table: &'a crate::embedding::EmbeddingTable,
}

impl<'a> EmbeddingPairScorer<'a> {
    pub fn new(table: &'a crate::embedding::EmbeddingTable) -> Self {
        EmbeddingPairScorer { table }
    }

    pub fn similarity(&self, a: &PoPair, b: &PoPair) -> f64 {
        if a == b {
            return 1.0;
        }
        crate::embedding::phrase_similarity(&a.phrase(), &b.phrase(), self.table)
            .map_or(0.0, |s| s.clamp(0.0, 1.0))
    }
}

impl PairScorer for EmbeddingPairScorer<'_> {
    fn score(&self, pairs: &[(&PoPair, &PoPair)]) -> Result<Vec<f64>> {
        Ok(pairs.iter().map(|(a, b)| self.similarity(a, b)).collect())
    }
}

#[derive(Serialize)]
struct PairRequest<'a> {
    p1: &'a str,
    o1: &'a str,
    p2: &'a str,
    o2: &'a str,
}

#[derive(Deserialize)]
struct PairResponse {
    similarity: f64,
}

/// Scores every pair with the external scorer. A timeout fails the batch.
pub fn score_pairs_external(pairs: &[(&PoPair, &PoPair)], scorer: &mut ScorerProcess) -> Result<Vec<f64>> {
    let requests: Vec<PairRequest<'_>> = pairs
        .iter()
        .map(|(a, b)| PairRequest {
            p1: &a.predicate,
            o1: &a.object,
            p2: &b.predicate,
            o2: &b.object,
        })
        .collect();
    let answers = scorer.exchange::<_, PairResponse>(&requests)?;
    let mut out = Vec::with_capacity(pairs.len());
    for answer in answers.responses {
        let Some((line, r)) = answer else {
            return Err(Error::ScorerTimeout(answers.timeout.unwrap_or(scorer.timeout())));
        };
        if !(0.0..=1.0).contains(&r.similarity) {
            return Err(Error::protocol(line, format!("similarity {} outside [0, 1]", r.similarity)));
        }
        out.push(r.similarity);
    }
    Ok(out)
}

pub struct ExternalPairScorer {
    process: std::sync::Mutex<ScorerProcess>,
}

impl ExternalPairScorer {
    pub fn new(process: ScorerProcess) -> Self {
        ExternalPairScorer {
            process: std::sync::Mutex::new(process),
        }
    }
}

impl PairScorer for ExternalPairScorer {
    fn score(&self, pairs: &[(&PoPair, &PoPair)]) -> Result<Vec<f64>> {
        score_pairs_external(pairs, &mut self.process.lock().expect("scorer lock poisoned"))
    }
}
