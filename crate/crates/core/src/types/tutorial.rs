use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SourceId;

/// Content-addressed reference to an image blob (`<sha256>.png`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImageRef(pub String);

impl ImageRef {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Content-addressed reference to a non-image blob (video stream, audio).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MediaRef(pub String);

impl MediaRef {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Video,
    Article,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Platform {
    Mobile,
    Desktop,
}

impl Platform {
    pub fn as_str(self) -> &'static str {
        match self {
            Platform::Mobile => "mobile",
            Platform::Desktop => "desktop",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Transcript {
    pub segments: Vec<TranscriptSegment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranscriptError {
    #[error("segment {index} has start >= end")]
    EmptySegment { index: usize },
    #[error("segment {index} overlaps or precedes the previous segment")]
    Overlap { index: usize },
    #[error("segment {index} has a non-finite or negative timestamp")]
    BadTimestamp { index: usize },
}

impl Transcript {
    pub fn new(segments: Vec<TranscriptSegment>) -> Result<Self, TranscriptError> {
        let t = Transcript { segments };
        t.validate()?;
        Ok(t)
    }

    /// Segments sorted, non-overlapping, each with `start_s < end_s`.
    pub fn validate(&self) -> Result<(), TranscriptError> {
        let mut prev_end = f64::NEG_INFINITY;
        for (index, s) in self.segments.iter().enumerate() {
            if !s.start_s.is_finite() || !s.end_s.is_finite() || s.start_s < 0.0 {
                return Err(TranscriptError::BadTimestamp { index });
            }
            if s.start_s >= s.end_s {
                return Err(TranscriptError::EmptySegment { index });
            }
            if s.start_s < prev_end {
                return Err(TranscriptError::Overlap { index });
            }
            prev_end = s.end_s;
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn text(&self) -> String {
        self.segments
            .iter()
            .map(|s| s.text.trim())
            .filter(|t| !t.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TextBundle {
    pub title: String,
    /// Video introduction, or article lead paragraph.
    #[serde(default)]
    pub body: String,
    /// Article step blocks in document order. Empty for videos.
    #[serde(default)]
    pub step_texts: Vec<String>,
    /// Captions shipped with the source, when available.
    #[serde(default)]
    pub transcript: Option<Transcript>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VideoSource {
    /// Raw-frame stream stored in the blob store.
    RawStream { media: MediaRef },
    /// Directory of zero-padded frame images plus a manifest.
    FrameDir { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VisualBundle {
    Article {
        images: Vec<ImageRef>,
    },
    Video {
        source: VideoSource,
        fps: f64,
        frame_count: u64,
        #[serde(default)]
        audio: Option<MediaRef>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTutorial {
    pub id: SourceId,
    pub modality: Modality,
    pub textual: TextBundle,
    pub visual: VisualBundle,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TutorialError {
    #[error("video tutorial must have at least one frame")]
    NoFrames,
    #[error("modality {0:?} does not match the visual bundle")]
    ModalityMismatch(Modality),
    #[error("transcript: {0}")]
    Transcript(#[from] TranscriptError),
    #[error("native id is empty")]
    EmptyId,
    #[error("step {0} has an empty rough description")]
    EmptyDescription(usize),
    #[error("step indices must be 1..=T, found {found} at position {position}")]
    BadIndex { position: usize, found: usize },
    #[error("tutorial has no steps")]
    NoSteps,
    #[error("task is empty")]
    EmptyTask,
}

impl RawTutorial {
    pub fn validate(&self) -> Result<(), TutorialError> {
        if self.id.native_id.is_empty() {
            return Err(TutorialError::EmptyId);
        }
        match (&self.visual, self.modality) {
            (VisualBundle::Video { frame_count, .. }, Modality::Video) => {
                if *frame_count < 1 {
                    return Err(TutorialError::NoFrames);
                }
            }
            (VisualBundle::Article { .. }, Modality::Article) => {}
            _ => return Err(TutorialError::ModalityMismatch(self.modality)),
        }
        if let Some(t) = &self.textual.transcript {
            t.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepPair {
    pub index: usize,
    pub observation: ImageRef,
    pub rough_description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedTutorial {
    pub id: SourceId,
    pub task: String,
    pub platform: Platform,
    pub steps: Vec<StepPair>,
}

impl ProcessedTutorial {
    pub fn validate(&self) -> Result<(), TutorialError> {
        if self.task.trim().is_empty() {
            return Err(TutorialError::EmptyTask);
        }
        if self.steps.is_empty() {
            return Err(TutorialError::NoSteps);
        }
        for (position, s) in self.steps.iter().enumerate() {
            if s.index != position + 1 {
                return Err(TutorialError::BadIndex {
                    position,
                    found: s.index,
                });
            }
            if s.rough_description.trim().is_empty() {
                return Err(TutorialError::EmptyDescription(s.index));
            }
        }
        Ok(())
    }
}
