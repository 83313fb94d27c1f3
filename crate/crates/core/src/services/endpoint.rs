use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceEndpoint {
    pub base_url: String,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default, skip_serializing)]
    pub auth_token: Option<String>,
    pub timeout_s: f64,
    pub max_retries: u32,
    /// Dispatched attempts allowed per sliding 60 s window; 0 disables limiting.
    pub requests_per_minute: u32,
    /// Seed for the backoff jitter source.
    #[serde(default)]
    pub jitter_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EndpointError {
    #[error("timeout must be > 0")]
    Timeout,
    #[error("base_url must not be empty")]
    BaseUrl,
}

impl ServiceEndpoint {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: None,
            auth_token: None,
            timeout_s: 60.0,
            max_retries: 3,
            requests_per_minute: 0,
            jitter_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), EndpointError> {
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(EndpointError::Timeout);
        }
        if self.base_url.trim().is_empty() {
            return Err(EndpointError::BaseUrl);
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s)
    }

    pub fn url(&self, path: &str) -> String {
        format!(
            "{}/{}",
            self.base_url.trim_end_matches('/'),
            path.trim_start_matches('/')
        )
    }
}
