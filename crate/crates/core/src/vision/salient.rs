use image::imageops::{self, FilterType};
use image::GrayImage;
use serde::{Deserialize, Serialize};

use super::frame::{Frame, FrameError};
use super::gmm::{GmmError, GmmModel, GmmParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaliencyParams {
    pub rho_on: f64,
    pub rho_off: f64,
    pub burn_in: u64,
    pub min_gap_s: f64,
    /// Long side of the detection raster; frames are never upscaled.
    pub working_long_side: u32,
    pub gmm: GmmParams,
}

impl Default for SaliencyParams {
    fn default() -> Self {
        Self {
            rho_on: 0.05,
            rho_off: 0.01,
            burn_in: 15,
            min_gap_s: 0.5,
            working_long_side: 320,
            // A short history lets a cut be absorbed within a few frames;
            // at 500 frames a full-screen change stays foreground for ~50.
            gmm: GmmParams {
                history: 20,
                ..GmmParams::default()
            },
        }
    }
}

impl SaliencyParams {
    pub fn min_gap_frames(&self, fps: f64) -> u64 {
        (self.min_gap_s * fps).ceil().max(1.0) as u64
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Gmm(#[from] GmmError),
}

pub fn working_size(width: u32, height: u32, long_side: u32) -> (u32, u32) {
    let long = width.max(height);
    if long <= long_side || long_side == 0 {
        return (width, height);
    }
    let scale = long_side as f64 / long as f64;
    (
        ((width as f64 * scale).round() as u32).max(1),
        ((height as f64 * scale).round() as u32).max(1),
    )
}

/// Streaming change-event detector. Feed frames in order; each call returns
/// the frame index to emit, if that frame closes an event.
pub struct SalientDetector {
    params: SaliencyParams,
    min_gap: u64,
    model: Option<GmmModel>,
    in_event: bool,
    last_emit: Option<u64>,
    ratios: Vec<f64>,
}

impl SalientDetector {
    pub fn new(params: SaliencyParams, fps: f64) -> Result<Self, GmmError> {
        params.gmm.validate()?;
        Ok(Self {
            min_gap: params.min_gap_frames(fps),
            params,
            model: None,
            in_event: false,
            last_emit: None,
            ratios: Vec::new(),
        })
    }

    /// Foreground ratio of every frame pushed so far.
    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn push(&mut self, frame: &Frame) -> Result<Option<u64>, DetectError> {
        let gray = frame.to_gray();
        let (w, h) = working_size(gray.width(), gray.height(), self.params.working_long_side);
        let work: GrayImage = if (w, h) == gray.dimensions() {
            gray
        } else {
            imageops::resize(&gray, w, h, FilterType::Triangle)
        };
        let model = match &mut self.model {
            Some(m) => m,
            None => self.model.insert(GmmModel::new(w, h, self.params.gmm)?),
        };
        let rho = model.update(w, h, work.as_raw())?.ratio();
        self.ratios.push(rho);

        let t = frame.index;
        if t < self.params.burn_in {
            return Ok(None);
        }
        if !self.in_event {
            if rho >= self.params.rho_on {
                self.in_event = true;
            }
            return Ok(None);
        }
        if rho > self.params.rho_off {
            return Ok(None);
        }
        self.in_event = false;
        let spaced = self.last_emit.is_none_or(|last| t - last >= self.min_gap);
        if spaced {
            self.last_emit = Some(t);
            Ok(Some(t))
        } else {
            Ok(None)
        }
    }
}

/// Indices of settled frames following each change event. An event still
/// open when the stream ends emits nothing.
pub fn detect_salient_frames<I>(frames: I, fps: f64, params: &SaliencyParams) -> Result<Vec<u64>, DetectError>
where
    I: IntoIterator<Item = Result<Frame, FrameError>>,
{
    let mut det = SalientDetector::new(*params, fps)?;
    let mut out = Vec::new();
    for f in frames {
        if let Some(i) = det.push(&f?)? {
            out.push(i);
        }
    }
    Ok(out)
}
