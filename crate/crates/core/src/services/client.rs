use std::sync::Arc;

use serde_json::Value;
use thiserror::Error;
use tracing::{debug, warn};

use super::endpoint::ServiceEndpoint;
use super::prompts::agent_system_prompt;
use super::retry::{Backoff, BackoffPolicy, Clock, RateLimiter, SystemClock};
use super::transport::{Transport, TransportError, TransportRequest};
use super::wire::{
    chat_body, parse_chat_reply, parse_transcribe_reply, transcribe_body, ChatRequest,
    ChatResponse, UserTurn, CHAT_PATH, TRANSCRIBE_PATH,
};
use crate::grammar::serialize_thought_action;
use crate::types::{Platform, ThoughtAction, Transcript};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("{service} unavailable after {attempts} attempts: {last}")]
    Unavailable {
        service: String,
        attempts: u32,
        last: String,
    },
    #[error("{service} rejected the request with status {status}")]
    Rejected { service: String, status: u16 },
    #[error("malformed response from {service}: {detail}")]
    Malformed { service: String, detail: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no replay fixture for {service} request {key}")]
    ReplayMiss { service: String, key: String },
}

/// One prior agent step: its screenshot and what the agent did there.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentHistoryItem {
    pub observation_png: Vec<u8>,
    pub thought_action: ThoughtAction,
}

/// Blocking client for one model service. Shareable across workers; the
/// rate limiter and jitter source are the only synchronized state.
pub struct ServiceClient {
    name: String,
    endpoint: ServiceEndpoint,
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    limiter: RateLimiter,
    backoff: Backoff,
}

impl ServiceClient {
    pub fn new(name: impl Into<String>, endpoint: ServiceEndpoint, transport: Arc<dyn Transport>) -> Self {
        Self::with_clock(name, endpoint, transport, Arc::new(SystemClock::default()))
    }

    pub fn with_clock(
        name: impl Into<String>,
        endpoint: ServiceEndpoint,
        transport: Arc<dyn Transport>,
        clock: Arc<dyn Clock>,
    ) -> Self {
        let limiter = RateLimiter::new(endpoint.requests_per_minute);
        let backoff = Backoff::new(BackoffPolicy::default(), endpoint.jitter_seed);
        Self {
            name: name.into(),
            endpoint,
            transport,
            clock,
            limiter,
            backoff,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn endpoint(&self) -> &ServiceEndpoint {
        &self.endpoint
    }

    fn malformed(&self, detail: impl Into<String>) -> ServiceError {
        ServiceError::Malformed {
            service: self.name.clone(),
            detail: detail.into(),
        }
    }

    /// POST `body` to `path`, retrying timeouts, 408, 429 and 5xx with
    /// jittered exponential backoff, `max_retries` times at most.
    pub fn post_json(&self, path: &str, body: &Value) -> Result<Vec<u8>, ServiceError> {
        let bytes = serde_json::to_vec(body).expect("request serialization");
        let url = self.endpoint.url(path);
        let attempts_allowed = self.endpoint.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts_allowed {
            if attempt > 0 {
                self.clock.sleep(self.backoff.delay(attempt - 1));
            }
            self.limiter.acquire(self.clock.as_ref());
            let req = TransportRequest {
                url: &url,
                auth_token: self.endpoint.auth_token.as_deref(),
                body: &bytes,
                timeout: self.endpoint.timeout(),
            };
            match self.transport.post(&req) {
                Ok(reply) if (200..300).contains(&reply.status) => return Ok(reply.body),
                Ok(reply) if matches!(reply.status, 408 | 429) || reply.status >= 500 => {
                    debug!(service = %self.name, status = reply.status, attempt, "retriable status");
                    last = format!("status {}", reply.status);
                    if let Some(wait) = reply.retry_after {
                        self.clock.sleep(wait.min(BackoffPolicy::default().cap));
                    }
                }
                Ok(reply) => {
                    return Err(ServiceError::Rejected {
                        service: self.name.clone(),
                        status: reply.status,
                    })
                }
                Err(TransportError::ReplayMiss { key }) => {
                    return Err(ServiceError::ReplayMiss {
                        service: self.name.clone(),
                        key,
                    })
                }
                Err(e) if e.is_retriable() => {
                    debug!(service = %self.name, error = %e, attempt, "retriable transport error");
                    last = e.to_string();
                }
                Err(e) => {
                    return Err(ServiceError::Unavailable {
                        service: self.name.clone(),
                        attempts: attempt + 1,
                        last: e.to_string(),
                    })
                }
            }
        }
        warn!(service = %self.name, attempts = attempts_allowed, "retries exhausted");
        Err(ServiceError::Unavailable {
            service: self.name.clone(),
            attempts: attempts_allowed,
            last,
        })
    }

    pub fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, ServiceError> {
        if req.turns.is_empty() {
            return Err(ServiceError::Precondition("chat request needs a user turn".into()));
        }
        let body = chat_body(req, self.endpoint.model.as_deref());
        let reply = self.post_json(CHAT_PATH, &body)?;
        parse_chat_reply(&reply).map_err(|e| self.malformed(e))
    }

    /// Zero-length audio yields an empty transcript without a service call.
    pub fn transcribe(&self, audio: &[u8], mime: &str) -> Result<Transcript, ServiceError> {
        if audio.is_empty() {
            return Ok(Transcript::default());
        }
        let body = transcribe_body(audio, mime, self.endpoint.model.as_deref());
        let reply = self.post_json(TRANSCRIBE_PATH, &body)?;
        parse_transcribe_reply(&reply).map_err(|e| self.malformed(e))
    }

    /// Ask the GUI agent for the next thought and action. Returns the raw
    /// model text; parsing is left to the caller.
    pub fn agent_step(
        &self,
        observation_png: &[u8],
        query: &str,
        history: &[AgentHistoryItem],
        window: usize,
        platform: Platform,
    ) -> Result<String, ServiceError> {
        let req = agent_request(observation_png, query, history, window, platform)?;
        self.chat(&req).map(|r| r.text)
    }
}

/// The agent request: system prompt, the instruction, each history step as
/// (screenshot, previous output), then the current screenshot.
pub fn agent_request(
    observation_png: &[u8],
    query: &str,
    history: &[AgentHistoryItem],
    window: usize,
    platform: Platform,
) -> Result<ChatRequest, ServiceError> {
    if history.len() > window {
        return Err(ServiceError::Precondition(format!(
            "history length {} exceeds window {window}",
            history.len()
        )));
    }
    let mut req = ChatRequest::new(agent_system_prompt(platform))
        .turn(UserTurn::text(format!("Task instruction: {query}")));
    for (j, h) in history.iter().enumerate() {
        req = req.turn(
            UserTurn::default()
                .with_png(h.observation_png.clone())
                .with_text(format!(
                    "Previous step {}:\n{}",
                    j + 1,
                    serialize_thought_action(&h.thought_action)
                )),
        );
    }
    Ok(req.turn(
        UserTurn::default()
            .with_png(observation_png.to_vec())
            .with_text("Current observation. Output the next action."),
    ))
}
