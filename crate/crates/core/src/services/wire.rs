//! JSON bodies exchanged with the model services.
//!
//! Chat, agent and judge calls share one chat-completions style contract:
//!
//! ```json
//! {"messages": [
//!    {"role": "system", "content": "..."},
//!    {"role": "user", "content": [
//!        {"type": "text", "text": "..."},
//!        {"type": "image_url", "image_url": {"url": "data:image/png;base64,..."}}]}],
//!  "model": "...", "temperature": 0}
//! ```
//!
//! and the reply is `{"choices": [{"message": {"content": "..."}, "finish_reason": "stop"}]}`.
//! Transcription posts `{"audio": "data:<mime>;base64,...", "model": "..."}` and
//! expects `{"segments": [{"start": 0.0, "end": 1.5, "text": "..."}]}`.

use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::types::{Transcript, TranscriptSegment};

pub const CHAT_PATH: &str = "chat/completions";
pub const TRANSCRIBE_PATH: &str = "audio/transcriptions";

#[derive(Debug, Clone, PartialEq)]
pub enum ContentPart {
    Text(String),
    Image { mime: String, bytes: Vec<u8> },
}

impl ContentPart {
    pub fn png(bytes: Vec<u8>) -> Self {
        ContentPart::Image {
            mime: "image/png".into(),
            bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct UserTurn {
    pub parts: Vec<ContentPart>,
}

impl UserTurn {
    pub fn text(t: impl Into<String>) -> Self {
        Self {
            parts: vec![ContentPart::Text(t.into())],
        }
    }

    pub fn with_text(mut self, t: impl Into<String>) -> Self {
        self.parts.push(ContentPart::Text(t.into()));
        self
    }

    pub fn with_png(mut self, bytes: Vec<u8>) -> Self {
        self.parts.push(ContentPart::png(bytes));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChatRequest {
    pub system: String,
    pub turns: Vec<UserTurn>,
}

impl ChatRequest {
    pub fn new(system: impl Into<String>) -> Self {
        Self {
            system: system.into(),
            turns: Vec::new(),
        }
    }

    pub fn turn(mut self, t: UserTurn) -> Self {
        self.turns.push(t);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub text: String,
    pub finish_reason: Option<String>,
}

pub fn data_url(mime: &str, bytes: &[u8]) -> String {
    format!(
        "data:{mime};base64,{}",
        base64::engine::general_purpose::STANDARD.encode(bytes)
    )
}

pub fn chat_body(req: &ChatRequest, model: Option<&str>) -> Value {
    let mut messages = vec![json!({"role": "system", "content": req.system})];
    for turn in &req.turns {
        let content: Vec<Value> = turn
            .parts
            .iter()
            .map(|p| match p {
                ContentPart::Text(t) => json!({"type": "text", "text": t}),
                ContentPart::Image { mime, bytes } => {
                    json!({"type": "image_url", "image_url": {"url": data_url(mime, bytes)}})
                }
            })
            .collect();
        messages.push(json!({"role": "user", "content": content}));
    }
    let mut body = json!({"messages": messages, "temperature": 0});
    if let Some(m) = model {
        body["model"] = json!(m);
    }
    body
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChatReply {
    choices: Vec<Choice>,
}

pub fn parse_chat_reply(body: &[u8]) -> Result<ChatResponse, String> {
    let reply: ChatReply = serde_json::from_slice(body).map_err(|e| e.to_string())?;
    let first = reply
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| "reply has no choices".to_string())?;
    Ok(ChatResponse {
        text: first.message.content,
        finish_reason: first.finish_reason,
    })
}

pub fn chat_reply_body(text: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": text}, "finish_reason": "stop"}]})
        .to_string()
}

pub fn transcribe_body(audio: &[u8], mime: &str, model: Option<&str>) -> Value {
    let mut body = json!({"audio": data_url(mime, audio)});
    if let Some(m) = model {
        body["model"] = json!(m);
    }
    body
}

#[derive(Deserialize)]
struct WireSegment {
    start: f64,
    end: f64,
    text: String,
}

#[derive(Deserialize)]
struct TranscribeReply {
    segments: Vec<WireSegment>,
}

pub fn parse_transcribe_reply(body: &[u8]) -> Result<Transcript, String> {
    let reply: TranscribeReply = serde_json::from_slice(body).map_err(|e| e.to_string())?;
    let segments = reply
        .segments
        .into_iter()
        .map(|s| TranscriptSegment {
            start_s: s.start,
            end_s: s.end,
            text: s.text,
        })
        .collect();
    Transcript::new(segments).map_err(|e| e.to_string())
}

pub fn transcribe_reply_body(t: &Transcript) -> String {
    let segs: Vec<Value> = t
        .segments
        .iter()
        .map(|s| json!({"start": s.start_s, "end": s.end_s, "text": s.text}))
        .collect();
    json!({"segments": segs}).to_string()
}

/// Pull the first JSON object out of an LLM reply, tolerating code fences
/// and surrounding prose.
pub fn extract_json_object(text: &str) -> Option<Value> {
    let start = text.find('{')?;
    let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
    match stream.next() {
        Some(Ok(v)) if v.is_object() => Some(v),
        _ => None,
    }
}
