use std::io::Cursor;

use image::ImageFormat;
use thiserror::Error;
use tracing::warn;

use crate::services::prompts;
use crate::services::wire::extract_json_object;
use crate::services::{ChatRequest, ServiceClient, UserTurn};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("undecodable image: {0}")]
pub struct Undecodable(pub String);

/// Decode any supported image and return PNG bytes suitable for a model call.
pub fn normalize_to_png(bytes: &[u8]) -> Result<Vec<u8>, Undecodable> {
    let fmt = image::guess_format(bytes).map_err(|e| Undecodable(e.to_string()))?;
    let img = image::load_from_memory_with_format(bytes, fmt).map_err(|e| Undecodable(e.to_string()))?;
    if fmt == ImageFormat::Png {
        return Ok(bytes.to_vec());
    }
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Undecodable(e.to_string()))?;
    Ok(out.into_inner())
}

/// Ask the VLM whether the image is a GUI screenshot. Any service or
/// response problem counts as "not a screenshot".
pub fn classify_screenshot(image: &[u8], vlm: &ServiceClient) -> Result<bool, Undecodable> {
    let png = normalize_to_png(image)?;
    let t = prompts::screenshot();
    let req = ChatRequest::new(t.system(&[])).turn(UserTurn::default().with_png(png).with_text(t.user(&[])));
    let reply = match vlm.chat(&req) {
        Ok(r) => r,
        Err(e) => {
            warn!(error = %e, "screenshot classifier failed; treating as non-screenshot");
            return Ok(false);
        }
    };
    match extract_json_object(&reply.text).and_then(|v| v.get("screenshot").and_then(|b| b.as_bool())) {
        Some(b) => Ok(b),
        None => {
            warn!(reply = %reply.text, "malformed screenshot verdict; treating as non-screenshot");
            Ok(false)
        }
    }
}
