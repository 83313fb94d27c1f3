//! Clients for the external model services: chat LLM, speech recognition,
//! the zero-shot GUI agent and the VLM judge.

mod client;
mod endpoint;
pub mod prompts;
pub mod retry;
pub mod transport;
pub mod wire;

pub use client::{agent_request, AgentHistoryItem, ServiceClient, ServiceError};
pub use endpoint::{EndpointError, ServiceEndpoint};
pub use retry::{Clock, ManualClock, SystemClock};
pub use transport::{
    FnTransport, HttpReply, HttpTransport, MockRequest, RecordingTransport, ReplayTransport,
    Transport, TransportError,
};
pub use wire::{ChatRequest, ChatResponse, ContentPart, UserTurn};
