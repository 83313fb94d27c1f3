//! Textual side of tutorial processing: assembling text, platform
//! classification, task and rough-step extraction, and the content filter.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use tracing::warn;

use crate::services::prompts::{self, PromptTemplate};
use crate::services::wire::extract_json_object;
use crate::services::{ChatRequest, ServiceClient, ServiceError, UserTurn};
use crate::store::BlobStore;
use crate::types::{DropReason, Modality, Platform, RawTutorial, Transcript, Verdict, VisualBundle};

pub const DEFAULT_MAX_STEPS: usize = 9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TextError {
    #[error("text is empty")]
    EmptyText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledText {
    pub text: String,
    pub transcript: Option<Transcript>,
    /// Video whose transcript could not be obtained.
    pub transcript_missing: bool,
}

fn audio_mime(name: &str) -> &'static str {
    match name.rsplit('.').next().unwrap_or_default() {
        "wav" => "audio/wav",
        "mp3" => "audio/mpeg",
        "m4a" => "audio/mp4",
        "flac" => "audio/flac",
        "ogg" => "audio/ogg",
        _ => "application/octet-stream",
    }
}

fn join_parts<'a>(parts: impl IntoIterator<Item = &'a str>) -> String {
    parts
        .into_iter()
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Title, lead text, then either the transcript (videos) or the step
/// blocks (articles). Videos prefer shipped captions over ASR.
pub fn assemble_text(raw: &RawTutorial, asr: Option<&ServiceClient>, store: &BlobStore) -> AssembledText {
    let tb = &raw.textual;
    match raw.modality {
        Modality::Article => AssembledText {
            text: join_parts(
                [tb.title.as_str(), tb.body.as_str()]
                    .into_iter()
                    .chain(tb.step_texts.iter().map(String::as_str)),
            ),
            transcript: None,
            transcript_missing: false,
        },
        Modality::Video => {
            let transcript = tb
                .transcript
                .clone()
                .filter(|t| !t.is_empty())
                .or_else(|| transcribe(raw, asr, store));
            let missing = transcript.is_none();
            let spoken = transcript.as_ref().map(Transcript::text).unwrap_or_default();
            AssembledText {
                text: join_parts([tb.title.as_str(), tb.body.as_str(), spoken.as_str()]),
                transcript,
                transcript_missing: missing,
            }
        }
    }
}

fn transcribe(raw: &RawTutorial, asr: Option<&ServiceClient>, store: &BlobStore) -> Option<Transcript> {
    let VisualBundle::Video { audio: Some(audio), .. } = &raw.visual else {
        return None;
    };
    let asr = asr?;
    let bytes = match store.read(audio.as_str()) {
        Ok(b) => b,
        Err(e) => {
            warn!(trace_id = %raw.id.key(), error = %e, "audio blob unreadable");
            return None;
        }
    };
    match asr.transcribe(&bytes, audio_mime(audio.as_str())) {
        Ok(t) if !t.is_empty() => Some(t),
        Ok(_) => None,
        Err(e) => {
            warn!(trace_id = %raw.id.key(), error = %e, "transcription failed; continuing without transcript");
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatformClass {
    Mobile,
    Desktop,
    Other,
}

impl PlatformClass {
    pub fn platform(self) -> Option<Platform> {
        match self {
            PlatformClass::Mobile => Some(Platform::Mobile),
            PlatformClass::Desktop => Some(Platform::Desktop),
            PlatformClass::Other => None,
        }
    }
}

fn one_shot(llm: &ServiceClient, t: &PromptTemplate, vars: &[(&str, &str)]) -> Result<String, ServiceError> {
    let req = ChatRequest::new(t.system(vars)).turn(UserTurn::text(t.user(vars)));
    llm.chat(&req).map(|r| r.text)
}

/// Any failure to get a clean label counts as `Other`, which is discarded.
pub fn classify_platform(text: &str, llm: &ServiceClient) -> Result<PlatformClass, TextError> {
    if text.trim().is_empty() {
        return Err(TextError::EmptyText);
    }
    let reply = match one_shot(llm, &prompts::classify_platform(), &[("text", text)]) {
        Ok(r) => r,
        Err(e) => {
            warn!(error = %e, "platform classifier failed; classifying as other");
            return Ok(PlatformClass::Other);
        }
    };
    let label = extract_json_object(&reply).and_then(|v| v.get("platform")?.as_str().map(str::to_string));
    Ok(match label.as_deref() {
        Some("mobile") => PlatformClass::Mobile,
        Some("desktop") => PlatformClass::Desktop,
        Some("other") => PlatformClass::Other,
        _ => {
            warn!(reply = %reply, "malformed platform label; classifying as other");
            PlatformClass::Other
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextExtraction {
    pub platform: PlatformClass,
    pub task: String,
    pub rough_steps: Vec<String>,
    pub key_phrases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedTutorial {
    pub reason: DropReason,
    pub detail: String,
}

fn string_list(v: &Value, key: &str, required: bool) -> Result<Vec<String>, String> {
    match v.get(key) {
        None | Some(Value::Null) if !required => Ok(Vec::new()),
        None | Some(Value::Null) => Err(format!("missing `{key}`")),
        Some(Value::Array(items)) => items
            .iter()
            .map(|i| match i.as_str().map(str::trim) {
                Some(s) if !s.is_empty() => Ok(s.to_string()),
                _ => Err(format!("`{key}` must hold non-empty strings")),
            })
            .collect(),
        Some(_) => Err(format!("`{key}` must be an array")),
    }
}

/// Strict schema check for an extraction reply.
pub fn parse_extraction(reply: &str, platform: PlatformClass, max_steps: usize) -> Result<TextExtraction, String> {
    let v = extract_json_object(reply).ok_or("reply holds no JSON object")?;
    let task = match v.get("task").and_then(Value::as_str).map(str::trim) {
        Some(t) if !t.is_empty() => t.to_string(),
        _ => return Err("`task` must be a non-empty string".into()),
    };
    let rough_steps = string_list(&v, "steps", true)?;
    if rough_steps.is_empty() || rough_steps.len() > max_steps {
        return Err(format!("need 1..={max_steps} steps, got {}", rough_steps.len()));
    }
    let key_phrases = string_list(&v, "key_phrases", false)?;
    Ok(TextExtraction {
        platform,
        task,
        rough_steps,
        key_phrases,
    })
}

/// Extract the task and rough steps, re-prompting once on a reply that
/// fails the schema.
pub fn extract_task_and_steps(
    text: &str,
    platform: PlatformClass,
    llm: &ServiceClient,
    max_steps: usize,
) -> Result<TextExtraction, DroppedTutorial> {
    let pre = |detail: &str| DroppedTutorial {
        reason: DropReason::InvalidTutorial,
        detail: detail.into(),
    };
    if max_steps == 0 {
        return Err(pre("max_steps must be at least 1"));
    }
    if platform == PlatformClass::Other {
        return Err(pre("platform is other"));
    }
    if text.trim().is_empty() {
        return Err(pre("text is empty"));
    }
    let t = prompts::extract_task();
    let ms = max_steps.to_string();
    let vars = [("text", text), ("max_steps", ms.as_str())];
    let first = ChatRequest::new(t.system(&vars)).turn(UserTurn::text(t.user(&vars)));
    let unavailable = |e: ServiceError| DroppedTutorial {
        reason: DropReason::ExtractionUnavailable,
        detail: e.to_string(),
    };

    let reply = llm.chat(&first).map_err(unavailable)?.text;
    let problem = match parse_extraction(&reply, platform, max_steps) {
        Ok(x) => return Ok(x),
        Err(p) => p,
    };
    warn!(%problem, "extraction reply rejected; re-prompting once");
    let retry = first.turn(UserTurn::text(format!(
        "Your previous reply was rejected: {problem}. Reply again with only the JSON object."
    )));
    let reply = llm.chat(&retry).map_err(unavailable)?.text;
    parse_extraction(&reply, platform, max_steps).map_err(|p| DroppedTutorial {
        reason: DropReason::MalformedExtraction,
        detail: p,
    })
}

/// GUI-relevance verdict over title and content. Malformed replies and
/// service failures drop the tutorial.
pub fn content_filter(text: &str, title: &str, llm: &ServiceClient) -> Verdict {
    let reply = match one_shot(llm, &prompts::content_filter(), &[("title", title), ("text", text)]) {
        Ok(r) => r,
        Err(e) => return Verdict::drop(DropReason::JudgeUnavailable, e.to_string()),
    };
    let Some(v) = extract_json_object(&reply) else {
        return Verdict::drop(DropReason::MalformedVerdict, reply);
    };
    let reason = v.get("reason").and_then(Value::as_str).unwrap_or_default().to_string();
    match v.get("verdict").and_then(Value::as_str) {
        Some("yes") => Verdict::Keep,
        Some("no") => Verdict::drop(DropReason::NotGuiInteraction, reason),
        _ => Verdict::drop(DropReason::MalformedVerdict, reply),
    }
}
