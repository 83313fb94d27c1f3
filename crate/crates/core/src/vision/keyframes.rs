use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::frame::{Frame, FrameError};
use super::salient::{DetectError, SalientDetector, SaliencyParams};
use crate::store::BlobStore;
use crate::types::{ImageRef, Transcript};

/// Sorted, non-overlapping `[start_s, end_s)` windows.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub windows: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("segment {index} is empty, unsorted or overlapping")]
pub struct SegmentError {
    pub index: usize,
}

impl SegmentSpec {
    pub fn new(windows: Vec<(f64, f64)>) -> Result<Self, SegmentError> {
        let mut prev_end = f64::NEG_INFINITY;
        for (index, &(s, e)) in windows.iter().enumerate() {
            if !(s.is_finite() && e.is_finite() && s < e && s >= prev_end) {
                return Err(SegmentError { index });
            }
            prev_end = e;
        }
        Ok(Self { windows })
    }

    pub fn from_transcript(t: &Transcript) -> Self {
        Self {
            windows: t.segments.iter().map(|s| (s.start_s, s.end_s)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn segment_of(&self, t: f64) -> Option<usize> {
        self.windows.iter().position(|&(s, e)| s <= t && t < e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeyframeParams {
    pub keep_per_segment: usize,
    pub saliency: SaliencyParams,
}

impl Default for KeyframeParams {
    fn default() -> Self {
        Self {
            keep_per_segment: 1,
            saliency: SaliencyParams::default(),
        }
    }
}

/// Pick which emissions survive. With segments, each keeps its last
/// `keep` emissions and emissions outside every window are discarded;
/// without, all are kept. Input and output are `(index, timestamp)` in order.
pub fn select_per_segment(emitted: &[(u64, f64)], segments: Option<&SegmentSpec>, keep: usize) -> Vec<(u64, f64)> {
    let Some(spec) = segments else {
        return emitted.to_vec();
    };
    let mut buckets: Vec<Vec<(u64, f64)>> = vec![Vec::new(); spec.len()];
    for &(i, t) in emitted {
        if let Some(s) = spec.segment_of(t) {
            buckets[s].push((i, t));
        }
    }
    buckets
        .into_iter()
        .flat_map(|b| {
            let skip = b.len().saturating_sub(keep);
            b.into_iter().skip(skip)
        })
        .collect()
}

/// Run change detection over the whole stream once and return the selected
/// settled frames at native resolution, in temporal order.
pub fn extract_keyframes<I>(
    frames: I,
    fps: f64,
    segments: Option<&SegmentSpec>,
    params: &KeyframeParams,
) -> Result<Vec<Frame>, DetectError>
where
    I: IntoIterator<Item = Result<Frame, FrameError>>,
{
    let mut det = SalientDetector::new(params.saliency, fps)?;
    let mut hits = Vec::new();
    for f in frames {
        let f = f?;
        if det.push(&f)?.is_some() {
            hits.push(f);
        }
    }
    let stamps: Vec<(u64, f64)> = hits.iter().map(|f| (f.index, f.timestamp_s)).collect();
    let chosen = select_per_segment(&stamps, segments, params.keep_per_segment);
    Ok(hits
        .into_iter()
        .filter(|f| chosen.iter().any(|&(i, _)| i == f.index))
        .collect())
}

#[derive(Debug, Error)]
pub enum StoreFramesError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("blob store: {0}")]
    Io(#[from] std::io::Error),
}

pub fn store_keyframes(frames: &[Frame], store: &BlobStore) -> Result<Vec<ImageRef>, StoreFramesError> {
    frames
        .iter()
        .map(|f| Ok(store.put_image(&f.encode_png()?)?))
        .collect()
}
