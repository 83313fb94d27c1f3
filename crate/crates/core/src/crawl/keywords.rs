use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::services::prompts;
use crate::services::wire::extract_json_object;
use crate::services::{ChatRequest, ServiceClient, ServiceError, UserTurn};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSeed {
    pub app_or_web: String,
    pub task: String,
}

impl TaskSeed {
    pub fn new(app_or_web: impl Into<String>, task: impl Into<String>) -> Self {
        Self {
            app_or_web: app_or_web.into(),
            task: task.into(),
        }
    }

    pub fn render(&self) -> String {
        format!("{} {}", self.app_or_web.trim(), self.task.trim())
    }

    pub fn validate(&self) -> Result<(), KeywordError> {
        if self.app_or_web.trim().is_empty() || self.task.trim().is_empty() {
            return Err(KeywordError::EmptySeed(self.render()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KeywordError {
    #[error("at least one seed is required")]
    NoSeeds,
    #[error("seed `{0}` has an empty field")]
    EmptySeed(String),
    #[error("target count {target} is below the {seeds} seeds")]
    TargetTooSmall { target: usize, seeds: usize },
    #[error(transparent)]
    Service(#[from] ServiceError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordExpansion {
    pub keywords: Vec<String>,
    /// Set when the LLM reply was unusable and only seeds were returned.
    pub malformed_response: bool,
}

fn parse_keywords(text: &str) -> Option<Vec<String>> {
    let v = extract_json_object(text)?;
    v.get("keywords")?
        .as_array()?
        .iter()
        .map(|k| k.as_str().map(str::to_string))
        .collect()
}

/// Rendered seeds first, then LLM proposals, de-duplicated
/// case-insensitively and cut to `target_count`.
pub fn expand_keywords(
    seeds: &[TaskSeed],
    llm: &ServiceClient,
    target_count: usize,
) -> Result<KeywordExpansion, KeywordError> {
    if seeds.is_empty() {
        return Err(KeywordError::NoSeeds);
    }
    for s in seeds {
        s.validate()?;
    }
    if target_count < seeds.len() {
        return Err(KeywordError::TargetTooSmall {
            target: target_count,
            seeds: seeds.len(),
        });
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut push = |k: &str, out: &mut Vec<String>| {
        let k = k.split_whitespace().collect::<Vec<_>>().join(" ");
        if !k.is_empty() && seen.insert(k.to_lowercase()) {
            out.push(k);
        }
    };
    for s in seeds {
        push(&s.render(), &mut out);
    }
    if out.len() >= target_count {
        return Ok(KeywordExpansion {
            keywords: out,
            malformed_response: false,
        });
    }

    let t = prompts::keyword_expansion();
    let seed_lines = out.iter().map(|k| format!("- {k}")).collect::<Vec<_>>().join("\n");
    let count = (target_count - out.len()).to_string();
    let req = ChatRequest::new(t.system(&[]))
        .turn(UserTurn::text(t.user(&[("seeds", &seed_lines), ("count", &count)])));
    let reply = match llm.chat(&req) {
        Ok(r) => r,
        Err(ServiceError::Malformed { detail, .. }) => {
            warn!(%detail, "keyword expansion reply malformed; using seeds only");
            return Ok(KeywordExpansion {
                keywords: out,
                malformed_response: true,
            });
        }
        Err(e) => return Err(e.into()),
    };
    let Some(proposals) = parse_keywords(&reply.text) else {
        warn!(reply = %reply.text, "keyword expansion reply malformed; using seeds only");
        return Ok(KeywordExpansion {
            keywords: out,
            malformed_response: true,
        });
    };
    for p in &proposals {
        push(p, &mut out);
    }
    out.truncate(target_count);
    Ok(KeywordExpansion {
        keywords: out,
        malformed_response: false,
    })
}
