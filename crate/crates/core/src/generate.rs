//! Trajectory generation: pair rough steps with observations, ask the GUI
//! agent for a thought and action at every step, and split on failures.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, warn};

use crate::grammar::parse_agent_output;
use crate::services::{AgentHistoryItem, ServiceClient};
use crate::store::BlobStore;
use crate::text::TextExtraction;
use crate::types::{ActionKind, ImageRef, ProcessedTutorial, StepPair, ThoughtAction, TrajStep, Trajectory};

pub const DEFAULT_HISTORY_WINDOW: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentPolicy {
    Equal,
    /// More rough steps than observations; trailing steps dropped.
    TruncatedSteps,
    /// More observations than rough steps; trailing observations dropped.
    TruncatedObservations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub policy: AlignmentPolicy,
    pub pairs: Vec<StepPair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("alignment is empty: {steps} steps, {observations} observations")]
pub struct EmptyAfterAlignment {
    pub steps: usize,
    pub observations: usize,
}

/// Zip rough steps with observations up to the shorter of the two.
pub fn align_steps(text: &TextExtraction, observations: &[ImageRef]) -> Result<Alignment, EmptyAfterAlignment> {
    let (s, o) = (text.rough_steps.len(), observations.len());
    if s == 0 || o == 0 {
        return Err(EmptyAfterAlignment {
            steps: s,
            observations: o,
        });
    }
    let policy = match s.cmp(&o) {
        std::cmp::Ordering::Equal => AlignmentPolicy::Equal,
        std::cmp::Ordering::Greater => AlignmentPolicy::TruncatedSteps,
        std::cmp::Ordering::Less => AlignmentPolicy::TruncatedObservations,
    };
    let pairs = text
        .rough_steps
        .iter()
        .zip(observations)
        .enumerate()
        .map(|(i, (h, obs))| StepPair {
            index: i + 1,
            observation: obs.clone(),
            rough_description: h.clone(),
        })
        .collect();
    Ok(Alignment { policy, pairs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepResult {
    Ok { thought_action: ThoughtAction },
    ParseFailure { raw: String, reason: String },
    NonGui { action: ActionKind, raw: String },
    ServiceFailure { detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub index: usize,
    #[serde(flatten)]
    pub result: StepResult,
}

impl StepOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self.result, StepResult::Ok { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub history_window: usize,
    /// Send no history at all.
    pub stateless: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            history_window: DEFAULT_HISTORY_WINDOW,
            stateless: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("tutorial has no steps")]
    NoSteps,
    #[error("observation {0} unreadable: {1}")]
    Observation(String, std::io::Error),
}

/// Query the agent step by step with the rough description as query. The
/// history holds the most recent steps of the current unbroken Ok run.
pub fn generate_trajectory(
    tutorial: &ProcessedTutorial,
    agent: &ServiceClient,
    store: &BlobStore,
    cfg: GenerationConfig,
) -> Result<Vec<StepOutcome>, GenerateError> {
    if tutorial.steps.is_empty() {
        return Err(GenerateError::NoSteps);
    }
    let window = if cfg.stateless { 0 } else { cfg.history_window };
    let mut history: Vec<AgentHistoryItem> = Vec::new();
    let mut outcomes = Vec::with_capacity(tutorial.steps.len());
    let trace = tutorial.id.key();

    for step in &tutorial.steps {
        let png = store
            .read_image(&step.observation)
            .map_err(|e| GenerateError::Observation(step.observation.0.clone(), e))?;
        let start = history.len().saturating_sub(window);
        let result = match agent.agent_step(&png, &step.rough_description, &history[start..], window, tutorial.platform)
        {
            Err(e) => StepResult::ServiceFailure { detail: e.to_string() },
            Ok(raw) => match parse_agent_output(&raw) {
                Err(f) => StepResult::ParseFailure {
                    raw: f.raw,
                    reason: f.reason,
                },
                Ok(ta) => match ta.first_kind() {
                    Some(k) if k.is_non_gui() => StepResult::NonGui { action: k, raw },
                    _ => StepResult::Ok { thought_action: ta },
                },
            },
        };
        match &result {
            StepResult::Ok { thought_action } => {
                if window > 0 {
                    history.push(AgentHistoryItem {
                        observation_png: png,
                        thought_action: thought_action.clone(),
                    });
                    if history.len() > window {
                        history.remove(0);
                    }
                }
            }
            other => {
                debug!(trace_id = %trace, step = step.index, outcome = ?other, "step failed; history reset");
                history.clear();
            }
        }
        outcomes.push(StepOutcome {
            index: step.index,
            result,
        });
    }
    let failed = outcomes.iter().filter(|o| !o.is_ok()).count();
    if failed > 0 {
        warn!(trace_id = %trace, failed, total = outcomes.len(), "agent failed on some steps");
    }
    Ok(outcomes)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{outcomes} outcomes for {steps} steps")]
pub struct OutcomeCountMismatch {
    pub steps: usize,
    pub outcomes: usize,
}

/// Each maximal run of Ok outcomes becomes one trajectory, numbered from 0.
pub fn split_trajectory(
    tutorial: &ProcessedTutorial,
    outcomes: &[StepOutcome],
) -> Result<Vec<Trajectory>, OutcomeCountMismatch> {
    if outcomes.len() != tutorial.steps.len() {
        return Err(OutcomeCountMismatch {
            steps: tutorial.steps.len(),
            outcomes: outcomes.len(),
        });
    }
    let mut runs: Vec<Vec<TrajStep>> = Vec::new();
    let mut current: Vec<TrajStep> = Vec::new();
    for (step, outcome) in tutorial.steps.iter().zip(outcomes) {
        match &outcome.result {
            StepResult::Ok { thought_action } => current.push(TrajStep {
                observation: step.observation.clone(),
                thought_action: thought_action.clone(),
                source_rough_description: step.rough_description.clone(),
            }),
            _ => {
                if !current.is_empty() {
                    runs.push(std::mem::take(&mut current));
                }
            }
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    Ok(runs
        .into_iter()
        .enumerate()
        .map(|(ordinal, steps)| Trajectory {
            id: Trajectory::trajectory_id(&tutorial.id, ordinal),
            task: tutorial.task.clone(),
            platform: tutorial.platform,
            provenance: tutorial.id.clone(),
            steps,
        })
        .collect())
}

/// Per-tutorial generation record written to the generation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub tutorial: String,
    pub outcomes: Vec<StepOutcome>,
    /// `[start, end)` step index ranges (1-based) of each emitted trajectory.
    pub splits: Vec<(usize, usize)>,
    pub trajectories: Vec<String>,
}

pub fn split_ranges(outcomes: &[StepOutcome]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for o in outcomes {
        match (o.is_ok(), start) {
            (true, None) => start = Some(o.index),
            (false, Some(s)) => {
                out.push((s, o.index));
                start = None;
            }
            _ => {}
        }
    }
    if let (Some(s), Some(last)) = (start, outcomes.last()) {
        out.push((s, last.index + 1));
    }
    out
}
