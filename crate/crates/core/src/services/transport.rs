//! Byte-level transports behind the service clients: live HTTP, record,
//! replay, and in-process closures for tests and fixture generation.
//!
//! Replay fixtures live in one directory, one file per request, named by the
//! SHA-256 of the canonical request body (`<key>.json`).

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::store::sha256_hex;

#[derive(Debug, Clone, Copy)]
pub struct TransportRequest<'a> {
    pub url: &'a str,
    pub auth_token: Option<&'a str>,
    pub body: &'a [u8],
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: Vec<u8>,
    pub retry_after: Option<Duration>,
}

impl HttpReply {
    pub fn ok(body: impl Into<Vec<u8>>) -> Self {
        Self {
            status: 200,
            body: body.into(),
            retry_after: None,
        }
    }

    pub fn status(status: u16) -> Self {
        Self {
            status,
            body: Vec::new(),
            retry_after: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("no replay fixture for request {key}")]
    ReplayMiss { key: String },
    #[error("transport error: {0}")]
    Other(String),
}

impl TransportError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, TransportError::Timeout(_) | TransportError::Connect(_))
    }
}

pub trait Transport: Send + Sync {
    fn post(&self, req: &TransportRequest<'_>) -> Result<HttpReply, TransportError>;
}

/// Canonical form of a JSON body: keys sorted, compact. Bodies that are not
/// JSON are used as-is.
pub fn canonical_body(body: &[u8]) -> Vec<u8> {
    match serde_json::from_slice::<Value>(body) {
        Ok(v) => serde_json::to_vec(&v).expect("value serialization"),
        Err(_) => body.to_vec(),
    }
}

pub fn request_key(body: &[u8]) -> String {
    sha256_hex(&canonical_body(body))
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| TransportError::Other(e.to_string()))?;
        Ok(Self { client })
    }
}

fn parse_retry_after(v: &str) -> Option<Duration> {
    v.trim().parse::<u64>().ok().map(Duration::from_secs)
}

impl Transport for HttpTransport {
    fn post(&self, req: &TransportRequest<'_>) -> Result<HttpReply, TransportError> {
        let mut rb = self
            .client
            .post(req.url)
            .header("content-type", "application/json")
            .timeout(req.timeout)
            .body(req.body.to_vec());
        if let Some(tok) = req.auth_token {
            rb = rb.header("authorization", format!("Bearer {tok}"));
        }
        let classify = |e: reqwest::Error| {
            if e.is_timeout() {
                TransportError::Timeout(e.to_string())
            } else if e.is_connect() || e.is_request() {
                TransportError::Connect(e.to_string())
            } else {
                TransportError::Other(e.to_string())
            }
        };
        let resp = rb.send().map_err(classify)?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(parse_retry_after);
        let body = resp.bytes().map_err(classify)?.to_vec();
        Ok(HttpReply {
            status,
            body,
            retry_after,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ReplayEntry {
    status: u16,
    body: String,
    /// The request with inline media replaced by digests, for auditing.
    request: Value,
}

/// Replace every `data:<mime>;base64,<payload>` string by its digest.
pub fn redact_media(v: &Value) -> Value {
    match v {
        Value::String(s) if s.starts_with("data:") && s.contains(";base64,") => {
            let mime = s[5..].split(';').next().unwrap_or_default();
            Value::String(format!("<{mime} sha256:{}>", sha256_hex(s.as_bytes())))
        }
        Value::Array(a) => Value::Array(a.iter().map(redact_media).collect()),
        Value::Object(m) => Value::Object(
            m.iter()
                .map(|(k, v)| (k.clone(), redact_media(v)))
                .collect(),
        ),
        other => other.clone(),
    }
}

/// Serves recorded replies; never touches the network.
pub struct ReplayTransport {
    dir: PathBuf,
    hits: AtomicUsize,
}

impl ReplayTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            hits: AtomicUsize::new(0),
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Transport for ReplayTransport {
    fn post(&self, req: &TransportRequest<'_>) -> Result<HttpReply, TransportError> {
        let key = request_key(req.body);
        let path = self.dir.join(format!("{key}.json"));
        let raw = fs::read(&path).map_err(|_| TransportError::ReplayMiss { key: key.clone() })?;
        let entry: ReplayEntry = serde_json::from_slice(&raw)
            .map_err(|e| TransportError::Other(format!("{}: {e}", path.display())))?;
        self.hits.fetch_add(1, Ordering::SeqCst);
        Ok(HttpReply {
            status: entry.status,
            body: entry.body.into_bytes(),
            retry_after: None,
        })
    }
}

/// Forwards to `inner` and writes every reply into a replay directory.
pub struct RecordingTransport {
    inner: Arc<dyn Transport>,
    dir: PathBuf,
}

impl RecordingTransport {
    pub fn new(inner: Arc<dyn Transport>, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { inner, dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl Transport for RecordingTransport {
    fn post(&self, req: &TransportRequest<'_>) -> Result<HttpReply, TransportError> {
        let reply = self.inner.post(req)?;
        let key = request_key(req.body);
        let request = serde_json::from_slice::<Value>(req.body)
            .map(|v| redact_media(&v))
            .unwrap_or(Value::Null);
        let entry = ReplayEntry {
            status: reply.status,
            body: String::from_utf8_lossy(&reply.body).into_owned(),
            request,
        };
        let mut text = serde_json::to_string_pretty(&entry).expect("entry serialization");
        text.push('\n');
        fs::write(self.dir.join(format!("{key}.json")), text)
            .map_err(|e| TransportError::Other(e.to_string()))?;
        Ok(reply)
    }
}

/// A decoded request handed to [`FnTransport`] handlers.
#[derive(Debug, Clone)]
pub struct MockRequest {
    pub url: String,
    pub auth_token: Option<String>,
    pub body: Value,
    pub raw: Vec<u8>,
    /// 1-based position of this request among all requests seen.
    pub seq: usize,
}

impl MockRequest {
    /// All text parts of a chat request, joined by newlines.
    pub fn text(&self) -> String {
        let mut out = Vec::new();
        collect_text(&self.body, &mut out);
        out.join("\n")
    }

    /// Decoded inline media payloads (images, audio) in request order.
    pub fn media(&self) -> Vec<Vec<u8>> {
        use base64::Engine;
        let mut urls = Vec::new();
        collect_data_urls(&self.body, &mut urls);
        urls.iter()
            .filter_map(|u| u.split_once(";base64,"))
            .filter_map(|(_, b64)| base64::engine::general_purpose::STANDARD.decode(b64).ok())
            .collect()
    }

    pub fn system_prompt(&self) -> Option<&str> {
        self.body
            .get("messages")?
            .as_array()?
            .iter()
            .find(|m| m.get("role").and_then(Value::as_str) == Some("system"))?
            .get("content")?
            .as_str()
    }
}

fn collect_text(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            if m.get("type").and_then(Value::as_str) == Some("text") {
                if let Some(t) = m.get("text").and_then(Value::as_str) {
                    out.push(t.to_string());
                }
            }
            for (k, child) in m {
                if k == "content" {
                    if let Value::String(s) = child {
                        out.push(s.clone());
                    }
                }
                collect_text(child, out);
            }
        }
        Value::Array(a) => a.iter().for_each(|c| collect_text(c, out)),
        _ => {}
    }
}

fn collect_data_urls(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::String(s) if s.starts_with("data:") => out.push(s.clone()),
        Value::Object(m) => m.values().for_each(|c| collect_data_urls(c, out)),
        Value::Array(a) => a.iter().for_each(|c| collect_data_urls(c, out)),
        _ => {}
    }
}

type Handler = dyn Fn(&MockRequest) -> Result<HttpReply, TransportError> + Send + Sync;

/// In-process mock service driven by a closure. Counts requests.
pub struct FnTransport {
    handler: Box<Handler>,
    count: AtomicUsize,
    log: std::sync::Mutex<Vec<MockRequest>>,
}

impl FnTransport {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&MockRequest) -> Result<HttpReply, TransportError> + Send + Sync + 'static,
    {
        Self {
            handler: Box::new(f),
            count: AtomicUsize::new(0),
            log: std::sync::Mutex::new(Vec::new()),
        }
    }

    /// Mock that always answers 200 with `body`.
    pub fn constant(body: impl Into<String>) -> Self {
        let body = body.into();
        Self::new(move |_| Ok(HttpReply::ok(body.clone())))
    }

    pub fn requests(&self) -> usize {
        self.count.load(Ordering::SeqCst)
    }

    pub fn log(&self) -> Vec<MockRequest> {
        self.log.lock().unwrap().clone()
    }
}

impl Transport for FnTransport {
    fn post(&self, req: &TransportRequest<'_>) -> Result<HttpReply, TransportError> {
        let seq = self.count.fetch_add(1, Ordering::SeqCst) + 1;
        let mock = MockRequest {
            url: req.url.to_string(),
            auth_token: req.auth_token.map(str::to_string),
            body: serde_json::from_slice(req.body).unwrap_or(Value::Null),
            raw: req.body.to_vec(),
            seq,
        };
        let reply = (self.handler)(&mock);
        self.log.lock().unwrap().push(mock);
        reply
    }
}
