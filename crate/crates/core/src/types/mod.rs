//! Domain types shared by every pipeline stage. No I/O lives here.

pub mod action;
mod counters;
mod drops;
mod source;
mod trajectory;
mod tutorial;

pub use action::{
    format_coord, quantize, validate_action, Action, ActionField, ActionKind, Point, Position, PositionRule,
    ValidationError, ValueRule,
};
pub use counters::{format_percent, step_bucket, CounterError, PipelineCounters, Stage, STEP_BUCKETS};
pub use drops::{DropReason, Verdict};
pub use source::{canonicalize_source_id, SourceId, SourceKind, UnrecognizedSource};
pub use trajectory::{
    BBox, BBoxError, HistoryEntry, SftSample, ThoughtAction, ThoughtActionError, TrajStep,
    Trajectory, TrajectoryError,
};
pub use tutorial::{
    ImageRef, MediaRef, Modality, Platform, ProcessedTutorial, RawTutorial, StepPair, TextBundle,
    Transcript, TranscriptError, TranscriptSegment, TutorialError, VideoSource, VisualBundle,
};
