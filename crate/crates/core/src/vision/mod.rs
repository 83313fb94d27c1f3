//! Observation extraction: screenshot classification for article images and
//! change-event key frames for videos.

pub mod frame;
pub mod gmm;
mod keyframes;
mod salient;
mod screenshot;

pub use frame::{Frame, FrameDirReader, FrameError, PixelFormat, RawFrameReader, RawFrameWriter, RawStreamHeader};
pub use gmm::{ForegroundMask, GmmError, GmmModel, GmmParams};
pub use keyframes::{
    extract_keyframes, select_per_segment, store_keyframes, KeyframeParams, SegmentError, SegmentSpec,
    StoreFramesError,
};
pub use salient::{detect_salient_frames, working_size, DetectError, SalientDetector, SaliencyParams};
pub use screenshot::{classify_screenshot, normalize_to_png, Undecodable};
