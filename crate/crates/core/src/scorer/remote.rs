use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{log_rows, validate_row, Scorer};
use crate::concept::{ConceptTable, OutputId};
use crate::error::{ConceptError, ScorerError};

/// Wire request: one row is expected per prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: u64,
    pub prefixes: Vec<Vec<OutputId>>,
}

/// Wire response. Hard zeros travel as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub id: u64,
    #[serde(with = "log_rows")]
    pub logprobs: Vec<Vec<f64>>,
}

/// Body of `GET /vocab`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabResponse {
    pub vocab_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept_table: Option<Value>,
}

#[derive(Debug, Clone, Copy)]
pub struct RemoteOptions {
    /// Per-request deadline.
    pub timeout: Duration,
    /// Largest number of prefixes sent in one request.
    pub batch_limit: usize,
}

impl Default for RemoteOptions {
    fn default() -> Self {
        RemoteOptions {
            timeout: Duration::from_secs(30),
            batch_limit: 64,
        }
    }
}

enum Transport {
    Stream {
        writer: Box<dyn Write + Send>,
        lines: Receiver<io::Result<String>>,
    },
    Http {
        agent: ureq::Agent,
        base: String,
    },
}

/// Client for an out-of-process scorer speaking newline-delimited JSON over
/// a byte stream, or JSON over HTTP (`POST /score`, `GET /vocab`).
pub struct RemoteScorer {
    transport: Mutex<Transport>,
    vocab: usize,
    options: RemoteOptions,
    next_id: AtomicU64,
    concept_table: Option<Value>,
}

fn protocol(msg: impl Into<String>) -> ScorerError {
    ScorerError::Protocol(msg.into())
}

fn map_ureq(err: ureq::Error) -> ScorerError {
    match err {
        ureq::Error::Timeout(_) => ScorerError::Timeout,
        ureq::Error::Io(e)
            if matches!(
                e.kind(),
                io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock
            ) =>
        {
            ScorerError::Timeout
        }
        ureq::Error::Io(e) => ScorerError::Io(e),
        ureq::Error::StatusCode(code) => protocol(format!("HTTP status {code}")),
        other => protocol(other.to_string()),
    }
}

/// Parses a response line, surfacing `{"id":..,"error":..}` payloads.
fn parse_response(text: &str) -> Result<ScoreResponse, ScorerError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| protocol(format!("malformed response: {e}")))?;
    if let Some(err) = value.get("error") {
        return Err(protocol(format!("scorer reported an error: {err}")));
    }
    serde_json::from_value(value).map_err(|e| protocol(format!("malformed response: {e}")))
}

impl RemoteScorer {
    /// NDJSON over an arbitrary stream pair, e.g. a child process's stdio.
    /// Without an explicit vocabulary size the width of the row for the
    /// empty prefix is used.
    pub fn from_stream(
        reader: impl Read + Send + 'static,
        writer: impl Write + Send + 'static,
        vocab: Option<usize>,
        options: RemoteOptions,
    ) -> Result<Self, ScorerError> {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let transport = Transport::Stream {
            writer: Box::new(writer),
            lines: rx,
        };
        Self::finish(transport, vocab, None, options)
    }

    pub fn connect_tcp(
        addr: impl ToSocketAddrs,
        vocab: Option<usize>,
        options: RemoteOptions,
    ) -> Result<Self, ScorerError> {
        let addr = addr
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| ScorerError::Invalid("address resolves to nothing".into()))?;
        let stream = TcpStream::connect_timeout(&addr, options.timeout)?;
        stream.set_nodelay(true)?;
        let reader = stream.try_clone()?;
        Self::from_stream(reader, stream, vocab, options)
    }

    /// HTTP endpoint rooted at `base` (e.g. `http://127.0.0.1:8000`); the
    /// vocabulary comes from the `/vocab` handshake.
    pub fn connect_http(base: &str, options: RemoteOptions) -> Result<Self, ScorerError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(options.timeout))
            .build()
            .into();
        let base = base.trim_end_matches('/').to_string();
        let body = agent
            .get(&format!("{base}/vocab"))
            .call()
            .map_err(map_ureq)?
            .body_mut()
            .read_to_string()
            .map_err(map_ureq)?;
        let vocab: VocabResponse = serde_json::from_str(&body)
            .map_err(|e| protocol(format!("malformed vocab handshake: {e}")))?;
        let transport = Transport::Http { agent, base };
        Self::finish(
            transport,
            Some(vocab.vocab_size),
            vocab.concept_table,
            options,
        )
    }

    /// `tcp://host:port` or `http(s)://...`.
    pub fn connect(url: &str, options: RemoteOptions) -> Result<Self, ScorerError> {
        if let Some(addr) = url.strip_prefix("tcp://") {
            Self::connect_tcp(addr, None, options)
        } else if url.starts_with("http://") || url.starts_with("https://") {
            Self::connect_http(url, options)
        } else {
            Err(ScorerError::Invalid(format!(
                "unsupported scorer URL `{url}`"
            )))
        }
    }

    fn finish(
        transport: Transport,
        vocab: Option<usize>,
        concept_table: Option<Value>,
        options: RemoteOptions,
    ) -> Result<Self, ScorerError> {
        if options.batch_limit == 0 {
            return Err(ScorerError::Invalid("batch limit must be positive".into()));
        }
        let mut scorer = RemoteScorer {
            transport: Mutex::new(transport),
            vocab: vocab.unwrap_or(0),
            options,
            next_id: AtomicU64::new(1),
            concept_table,
        };
        if vocab.is_none() {
            let rows = scorer.round_trip(vec![Vec::new()])?;
            scorer.vocab = rows[0].len();
            validate_row(&rows[0], 0, scorer.vocab)?;
        }
        if scorer.vocab == 0 {
            return Err(protocol("scorer reported an empty vocabulary"));
        }
        Ok(scorer)
    }

    /// Concept table offered by the `/vocab` handshake, if any.
    pub fn concept_table(&self) -> Option<Result<ConceptTable, ConceptError>> {
        self.concept_table
            .as_ref()
            .map(|v| ConceptTable::from_json_str(&v.to_string(), Some(self.vocab)))
    }

    pub fn options(&self) -> RemoteOptions {
        self.options
    }

    /// Sends one request and returns its unvalidated rows.
    fn round_trip(&self, prefixes: Vec<Vec<OutputId>>) -> Result<Vec<Vec<f64>>, ScorerError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let count = prefixes.len();
        let request =
            serde_json::to_string(&ScoreRequest { id, prefixes }).expect("request serializes");
        let mut transport = self.transport.lock().unwrap_or_else(|e| e.into_inner());
        let response = match &mut *transport {
            Transport::Stream { writer, lines } => {
                writer.write_all(request.as_bytes())?;
                writer.write_all(b"\n")?;
                writer.flush()?;
                let deadline = Instant::now() + self.options.timeout;
                loop {
                    let left = deadline.saturating_duration_since(Instant::now());
                    let line = match lines.recv_timeout(left) {
                        Ok(line) => line?,
                        Err(RecvTimeoutError::Timeout) => return Err(ScorerError::Timeout),
                        Err(RecvTimeoutError::Disconnected) => {
                            return Err(protocol("connection closed"))
                        }
                    };
                    if line.trim().is_empty() {
                        continue;
                    }
                    let response = parse_response(&line)?;
                    // Late answers to requests that already timed out.
                    if response.id < id {
                        continue;
                    }
                    break response;
                }
            }
            Transport::Http { agent, base } => {
                let body = agent
                    .post(&format!("{base}/score"))
                    .header("Content-Type", "application/json")
                    .send(request.as_str())
                    .map_err(map_ureq)?
                    .body_mut()
                    .read_to_string()
                    .map_err(map_ureq)?;
                parse_response(&body)?
            }
        };
        if response.id != id {
            return Err(protocol(format!(
                "response id {} does not match request id {id}",
                response.id
            )));
        }
        if response.logprobs.len() != count {
            return Err(protocol(format!(
                "{} rows returned for {count} prefixes",
                response.logprobs.len()
            )));
        }
        Ok(response.logprobs)
    }
}

impl Scorer for RemoteScorer {
    fn vocab_size(&self) -> usize {
        self.vocab
    }

    fn score(&self, prefixes: &[&[OutputId]]) -> Result<Vec<Vec<f64>>, ScorerError> {
        let mut out = Vec::with_capacity(prefixes.len());
        for chunk in prefixes.chunks(self.options.batch_limit) {
            let rows = self.round_trip(chunk.iter().map(|p| p.to_vec()).collect())?;
            for row in rows {
                validate_row(&row, out.len(), self.vocab).map_err(|e| match e {
                    ScorerError::Invalid(msg) => protocol(msg),
                    other => other,
                })?;
                out.push(row);
            }
        }
        Ok(out)
    }

    fn is_exclusive(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn wire_field_names() {
        let req = ScoreRequest {
            id: 7,
            prefixes: vec![vec![0, 2], vec![]],
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"id":7,"prefixes":[[0,2],[]]}"#
        );
        let resp = ScoreResponse {
            id: 7,
            logprobs: vec![vec![0.0, f64::NEG_INFINITY]],
        };
        assert_eq!(
            serde_json::to_string(&resp).unwrap(),
            r#"{"id":7,"logprobs":[[0.0,null]]}"#
        );
        let vocab = VocabResponse {
            vocab_size: 3,
            concept_table: None,
        };
        assert_eq!(
            serde_json::to_string(&vocab).unwrap(),
            r#"{"vocab_size":3}"#
        );
    }

    #[test]
    fn error_payload_is_protocol_error() {
        assert!(matches!(
            parse_response(r#"{"id":1,"error":"oom"}"#),
            Err(ScorerError::Protocol(_))
        ));
        assert!(matches!(
            parse_response("{nope"),
            Err(ScorerError::Protocol(_))
        ));
    }

    #[test]
    fn closed_stream_is_protocol_error() {
        let err = RemoteScorer::from_stream(
            Cursor::new(Vec::new()),
            io::sink(),
            None,
            RemoteOptions::default(),
        )
        .err()
        .unwrap();
        assert!(matches!(err, ScorerError::Protocol(_)));
    }

    #[test]
    fn rejects_unknown_scheme() {
        assert!(RemoteScorer::connect("ftp://x", RemoteOptions::default()).is_err());
    }
}
