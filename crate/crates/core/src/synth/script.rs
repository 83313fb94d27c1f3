//! A rule-driven stand-in for every model service, used to build replay
//! fixtures and to run the pipeline offline in tests.
//!
//! Each rule names the call it answers and a list of needles. A request
//! matches when every needle occurs in its text parts or, for media, in the
//! `sha256:<hex>` digests of its attachments. The first matching rule wins;
//! an unmatched request gets HTTP 404.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tracing::debug;

use crate::services::prompts::{self, PromptTemplate};
use crate::services::transport::{HttpReply, Transport, TransportError, TransportRequest};
use crate::services::wire::{chat_reply_body, transcribe_reply_body, CHAT_PATH, TRANSCRIBE_PATH};
use crate::services::MockRequest;
use crate::store::sha256_hex;
use crate::types::Transcript;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedCall {
    KeywordExpansion,
    ClassifyPlatform,
    ExtractTask,
    ContentFilter,
    Screenshot,
    Agent,
    TrajectoryJudge,
    Transcribe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptReply {
    Text(String),
    Transcript(Transcript),
    Status(u16),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    pub call: ScriptedCall,
    pub needles: Vec<String>,
    pub reply: ScriptReply,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScriptBook {
    pub rules: Vec<ScriptRule>,
}

impl ScriptBook {
    pub fn push(&mut self, call: ScriptedCall, needles: &[&str], reply: ScriptReply) {
        self.rules.push(ScriptRule {
            call,
            needles: needles.iter().map(|s| s.to_string()).collect(),
            reply,
        });
    }

    pub fn text(&mut self, call: ScriptedCall, needles: &[&str], reply: impl Into<String>) {
        self.push(call, needles, ScriptReply::Text(reply.into()));
    }

    fn lookup(&self, call: ScriptedCall, haystack: &str) -> Option<&ScriptReply> {
        self.rules
            .iter()
            .find(|r| r.call == call && r.needles.iter().all(|n| haystack.contains(n.as_str())))
            .map(|r| &r.reply)
    }
}

fn first_line(t: PromptTemplate) -> String {
    t.system(&[]).lines().next().unwrap_or_default().to_string()
}

const AGENT_MARKER: &str = "You are an assistant trained to navigate";

/// Which service call a decoded request is.
pub fn classify_call(req: &MockRequest) -> Option<ScriptedCall> {
    if req.url.ends_with(TRANSCRIBE_PATH) {
        return Some(ScriptedCall::Transcribe);
    }
    if !req.url.ends_with(CHAT_PATH) {
        return None;
    }
    let system = req.system_prompt()?;
    if system.starts_with(AGENT_MARKER) {
        return Some(ScriptedCall::Agent);
    }
    let table = [
        (prompts::keyword_expansion(), ScriptedCall::KeywordExpansion),
        (prompts::classify_platform(), ScriptedCall::ClassifyPlatform),
        (prompts::extract_task(), ScriptedCall::ExtractTask),
        (prompts::content_filter(), ScriptedCall::ContentFilter),
        (prompts::screenshot(), ScriptedCall::Screenshot),
        (prompts::trajectory_judge(), ScriptedCall::TrajectoryJudge),
    ];
    table
        .into_iter()
        .find(|(t, _)| system.starts_with(&first_line(*t)))
        .map(|(_, c)| c)
}

fn haystack(req: &MockRequest) -> String {
    let mut h = req.text();
    for m in req.media() {
        h.push_str("\nsha256:");
        h.push_str(&sha256_hex(&m));
    }
    h
}

pub struct ScriptedTransport {
    book: ScriptBook,
    misses: AtomicUsize,
    seq: AtomicUsize,
}

impl ScriptedTransport {
    pub fn new(book: ScriptBook) -> Self {
        Self {
            book,
            misses: AtomicUsize::new(0),
            seq: AtomicUsize::new(0),
        }
    }

    /// Requests no rule answered.
    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::SeqCst)
    }

    pub fn answer(&self, req: &MockRequest) -> HttpReply {
        let Some(call) = classify_call(req) else {
            self.misses.fetch_add(1, Ordering::SeqCst);
            return HttpReply::status(400);
        };
        match self.book.lookup(call, &haystack(req)) {
            Some(ScriptReply::Text(t)) => HttpReply::ok(chat_reply_body(t)),
            Some(ScriptReply::Transcript(t)) => HttpReply::ok(transcribe_reply_body(t)),
            Some(ScriptReply::Status(s)) => HttpReply::status(*s),
            None => {
                debug!(?call, "no scripted reply");
                self.misses.fetch_add(1, Ordering::SeqCst);
                HttpReply::status(404)
            }
        }
    }
}

impl Transport for ScriptedTransport {
    fn post(&self, req: &TransportRequest<'_>) -> Result<HttpReply, TransportError> {
        let seq = self.seq.fetch_add(1, Ordering::SeqCst) + 1;
        let mock = MockRequest {
            url: req.url.to_string(),
            auth_token: req.auth_token.map(str::to_string),
            body: serde_json::from_slice(req.body).unwrap_or(Value::Null),
            raw: req.body.to_vec(),
            seq,
        };
        Ok(self.answer(&mock))
    }
}
