use std::fmt;

use serde::{Deserialize, Serialize};

/// Why an item left the funnel. Serialized as a snake_case code; the
/// display form is the human-readable phrase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Duplicate,
    InvalidTutorial,
    PlatformOther,
    MalformedExtraction,
    ExtractionUnavailable,
    VisualError,
    NoObservations,
    EmptyAfterAlignment,
    NotGuiInteraction,
    MalformedVerdict,
    JudgeUnavailable,
    NoTrajectory,
    InvalidTrajectory,
    PlatformMismatch,
    IncoherentActions,
    ObservationMismatch,
    NonGuiResidue,
    TruncatedTask,
}

impl DropReason {
    pub fn code(self) -> &'static str {
        match self {
            DropReason::Duplicate => "duplicate",
            DropReason::InvalidTutorial => "invalid_tutorial",
            DropReason::PlatformOther => "platform_other",
            DropReason::MalformedExtraction => "malformed_extraction",
            DropReason::ExtractionUnavailable => "extraction_unavailable",
            DropReason::VisualError => "visual_error",
            DropReason::NoObservations => "no_observations",
            DropReason::EmptyAfterAlignment => "empty_after_alignment",
            DropReason::NotGuiInteraction => "not_gui_interaction",
            DropReason::MalformedVerdict => "malformed_verdict",
            DropReason::JudgeUnavailable => "judge_unavailable",
            DropReason::NoTrajectory => "no_trajectory",
            DropReason::InvalidTrajectory => "invalid_trajectory",
            DropReason::PlatformMismatch => "platform_mismatch",
            DropReason::IncoherentActions => "incoherent_actions",
            DropReason::ObservationMismatch => "observation_mismatch",
            DropReason::NonGuiResidue => "non_gui_residue",
            DropReason::TruncatedTask => "truncated_task",
        }
    }

    pub fn phrase(self) -> &'static str {
        match self {
            DropReason::Duplicate => "duplicate",
            DropReason::InvalidTutorial => "invalid tutorial",
            DropReason::PlatformOther => "not a mobile or desktop tutorial",
            DropReason::MalformedExtraction => "malformed extraction",
            DropReason::ExtractionUnavailable => "extraction unavailable",
            DropReason::VisualError => "visual processing failed",
            DropReason::NoObservations => "no observations",
            DropReason::EmptyAfterAlignment => "empty after alignment",
            DropReason::NotGuiInteraction => "not GUI interaction",
            DropReason::MalformedVerdict => "malformed verdict",
            DropReason::JudgeUnavailable => "judge unavailable",
            DropReason::NoTrajectory => "no trajectory",
            DropReason::InvalidTrajectory => "invalid trajectory",
            DropReason::PlatformMismatch => "platform mismatch",
            DropReason::IncoherentActions => "incoherent actions",
            DropReason::ObservationMismatch => "observation mismatch",
            DropReason::NonGuiResidue => "non-GUI residue",
            DropReason::TruncatedTask => "truncated task",
        }
    }

    /// Reason codes a trajectory judge may return.
    pub fn from_judge_code(code: &str) -> Option<Self> {
        match code {
            "incoherent_actions" => Some(DropReason::IncoherentActions),
            "observation_mismatch" => Some(DropReason::ObservationMismatch),
            "non_gui_residue" => Some(DropReason::NonGuiResidue),
            "truncated_task" => Some(DropReason::TruncatedTask),
            _ => None,
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.phrase())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Keep,
    Drop { reason: DropReason, detail: String },
}

impl Verdict {
    pub fn drop(reason: DropReason, detail: impl Into<String>) -> Self {
        Verdict::Drop {
            reason,
            detail: detail.into(),
        }
    }

    pub fn is_keep(&self) -> bool {
        matches!(self, Verdict::Keep)
    }
}
