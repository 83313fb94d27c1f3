use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::action::{validate_action, Action, ActionKind, Point, ValidationError};
use super::{ImageRef, Platform, SourceId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThoughtAction {
    pub thought: String,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThoughtActionError {
    #[error("action list is empty")]
    NoActions,
    #[error("action {index}: {source}")]
    InvalidAction {
        index: usize,
        #[source]
        source: ValidationError,
    },
}

impl ThoughtAction {
    pub fn new(thought: impl Into<String>, actions: Vec<Action>) -> Self {
        Self {
            thought: thought.into(),
            actions,
        }
    }

    /// The producing service emitted an action without a `Thought:` section.
    pub fn thought_omitted(&self) -> bool {
        self.thought.is_empty()
    }

    pub fn first_kind(&self) -> Option<ActionKind> {
        self.actions.first().map(|a| a.kind)
    }

    pub fn validate(&self) -> Result<(), ThoughtActionError> {
        if self.actions.is_empty() {
            return Err(ThoughtActionError::NoActions);
        }
        for (index, a) in self.actions.iter().enumerate() {
            validate_action(a).map_err(|source| ThoughtActionError::InvalidAction { index, source })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajStep {
    pub observation: ImageRef,
    #[serde(flatten)]
    pub thought_action: ThoughtAction,
    pub source_rough_description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: String,
    pub task: String,
    pub platform: Platform,
    pub provenance: SourceId,
    pub steps: Vec<TrajStep>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("trajectory has no steps")]
    Empty,
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: ThoughtActionError,
    },
    #[error("step {step} starts with non-GUI action {kind}")]
    NonGuiStep { step: usize, kind: ActionKind },
}

impl Trajectory {
    pub fn trajectory_id(provenance: &SourceId, ordinal: usize) -> String {
        format!("{}#{}", provenance.key(), ordinal)
    }

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if self.steps.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        for (i, s) in self.steps.iter().enumerate() {
            let step = i + 1;
            s.thought_action
                .validate()
                .map_err(|source| TrajectoryError::Step { step, source })?;
            if let Some(kind) = s.thought_action.first_kind().filter(|k| k.is_non_gui()) {
                return Err(TrajectoryError::NonGuiStep { step, kind });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Normalized axis-aligned box `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid bounding box [{0}, {1}, {2}, {3}]")]
pub struct BBoxError(f64, f64, f64, f64);

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, BBoxError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if [x_min, y_min, x_max, y_max].iter().all(|v| unit(*v)) && x_min <= x_max && y_min <= y_max {
            Ok(Self {
                x_min,
                y_min,
                x_max,
                y_max,
            })
        } else {
            Err(BBoxError(x_min, y_min, x_max, y_max))
        }
    }

    /// Closed-interval membership on both axes.
    pub fn contains(&self, p: Point) -> bool {
        self.x_min <= p.x() && p.x() <= self.x_max && self.y_min <= p.y() && p.y() <= self.y_max
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = BBoxError;

    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

/// One prior step inside an SFT conditioning window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: usize,
    pub observation: ImageRef,
    pub thought: String,
    pub actions: String,
}

/// A single supervised example: task, up to `n` prior steps, the current
/// observation, and the step's thought and action as target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftSample {
    pub trajectory_id: String,
    pub step: usize,
    pub task: String,
    pub platform: Platform,
    pub n: usize,
    pub history: Vec<HistoryEntry>,
    pub current_observation: ImageRef,
    pub target: ThoughtAction,
}

impl SftSample {
    pub fn image_count(&self) -> usize {
        self.history.len() + 1
    }

    pub fn images(&self) -> Vec<&ImageRef> {
        self.history
            .iter()
            .map(|h| &h.observation)
            .chain(std::iter::once(&self.current_observation))
            .collect()
    }
}
