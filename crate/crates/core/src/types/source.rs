//! Source identifiers and their canonical form.
//!
//! Two spellings of the same tutorial (a `youtu.be` short link and a
//! `watch?v=` URL, an article URL with and without tracking parameters)
//! canonicalize to the same [`SourceId`], which is what deduplication keys on.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SourceKind {
    #[serde(rename = "youtube")]
    YouTube,
    #[serde(rename = "bilibili")]
    Bilibili,
    #[serde(rename = "tiktok")]
    TikTok,
    #[serde(rename = "wikihow")]
    WikiHow,
    #[serde(rename = "baidu_experience")]
    BaiduExperience,
    #[serde(rename = "fixture")]
    Fixture,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::YouTube => "youtube",
            SourceKind::Bilibili => "bilibili",
            SourceKind::TikTok => "tiktok",
            SourceKind::WikiHow => "wikihow",
            SourceKind::BaiduExperience => "baidu_experience",
            SourceKind::Fixture => "fixture",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceId {
    pub source: SourceKind,
    pub native_id: String,
}

impl SourceId {
    /// `source:native_id`, used as trace id and trajectory id prefix.
    pub fn key(&self) -> String {
        format!("{}:{}", self.source, self.native_id)
    }
}

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.source, self.native_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unrecognized {kind} identifier `{input}`")]
pub struct UnrecognizedSource {
    pub kind: SourceKind,
    pub input: String,
}

const TRACKING_PARAMS: &[&str] = &[
    "fbclid", "gclid", "dclid", "msclkid", "igshid", "si", "feature", "spm_id_from", "vd_source",
    "from", "share_source", "share_medium", "ref", "ref_src", "t", "pp", "ab_channel",
];

fn is_tracking_param(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    lower.starts_with("utm_") || TRACKING_PARAMS.contains(&lower.as_str())
}

fn parse_url(raw: &str) -> Option<Url> {
    let candidate = if raw.contains("://") {
        raw.to_string()
    } else if raw.contains('/') && raw.split('/').next().is_some_and(|h| h.contains('.')) {
        format!("https://{raw}")
    } else {
        return None;
    };
    Url::parse(&candidate).ok().filter(|u| u.host_str().is_some())
}

fn host_of(u: &Url) -> String {
    let h = u.host_str().unwrap_or_default().to_ascii_lowercase();
    h.strip_prefix("www.")
        .or_else(|| h.strip_prefix("m."))
        .unwrap_or(&h)
        .to_string()
}

fn is_video_id(s: &str) -> bool {
    !s.is_empty()
        && s.len() <= 64
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn path_segments(u: &Url) -> Vec<String> {
    u.path_segments()
        .map(|it| it.filter(|s| !s.is_empty()).map(str::to_string).collect())
        .unwrap_or_default()
}

fn youtube_id(raw: &str) -> Option<String> {
    let Some(u) = parse_url(raw) else {
        return is_video_id(raw).then(|| raw.to_string());
    };
    let host = host_of(&u);
    let segs = path_segments(&u);
    let id = match host.as_str() {
        "youtu.be" => segs.first().cloned(),
        "youtube.com" | "music.youtube.com" | "youtube-nocookie.com" => {
            match segs.first().map(String::as_str) {
                Some("watch") => u
                    .query_pairs()
                    .find(|(k, _)| k == "v")
                    .map(|(_, v)| v.into_owned()),
                Some("shorts") | Some("embed") | Some("live") | Some("v") => segs.get(1).cloned(),
                _ => None,
            }
        }
        _ => None,
    }?;
    is_video_id(&id).then_some(id)
}

fn bilibili_id(raw: &str) -> Option<String> {
    let is_bili = |s: &str| {
        let lower = s.to_ascii_lowercase();
        (lower.starts_with("bv") && s.len() > 2 && s[2..].chars().all(|c| c.is_ascii_alphanumeric()))
            || (lower.starts_with("av") && s.len() > 2 && s[2..].chars().all(|c| c.is_ascii_digit()))
    };
    let normalize = |s: &str| {
        // BV ids are case-sensitive after the prefix; av ids are numeric.
        format!("{}{}", s[..2].to_ascii_uppercase().replace("AV", "av"), &s[2..])
    };
    let Some(u) = parse_url(raw) else {
        return is_bili(raw).then(|| normalize(raw));
    };
    if !host_of(&u).ends_with("bilibili.com") {
        return None;
    }
    let segs = path_segments(&u);
    match segs.as_slice() {
        [video, id, ..] if video == "video" && is_bili(id) => Some(normalize(id)),
        _ => None,
    }
}

fn tiktok_id(raw: &str) -> Option<String> {
    let digits = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_digit());
    let Some(u) = parse_url(raw) else {
        return digits(raw).then(|| raw.to_string());
    };
    if !host_of(&u).ends_with("tiktok.com") {
        return None;
    }
    let segs = path_segments(&u);
    segs.iter()
        .position(|s| s == "video")
        .and_then(|i| segs.get(i + 1))
        .filter(|s| digits(s))
        .cloned()
}

/// Canonical article URL: https scheme, lowercased host with `www.`,
/// no fragment, no trailing slash, tracking parameters removed.
fn article_url(raw: &str, host_suffix: &str, canonical_host: &str) -> Option<String> {
    let u = parse_url(raw)?;
    if !host_of(&u).ends_with(host_suffix) {
        return None;
    }
    let path = u.path().trim_end_matches('/');
    if path.is_empty() {
        return None;
    }
    let kept: Vec<(String, String)> = u
        .query_pairs()
        .filter(|(k, _)| !is_tracking_param(k))
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    let mut out = Url::parse(&format!("https://{canonical_host}")).ok()?;
    out.set_path(path);
    if !kept.is_empty() {
        out.query_pairs_mut().extend_pairs(kept);
    }
    Some(out.to_string())
}

/// Canonicalize a raw URL or native id for `source`.
pub fn canonicalize_source_id(raw: &str, source: SourceKind) -> Result<SourceId, UnrecognizedSource> {
    let trimmed = raw.trim();
    let native = if trimmed.is_empty() {
        None
    } else {
        match source {
            SourceKind::YouTube => youtube_id(trimmed),
            SourceKind::Bilibili => bilibili_id(trimmed),
            SourceKind::TikTok => tiktok_id(trimmed),
            SourceKind::WikiHow => article_url(trimmed, "wikihow.com", "www.wikihow.com"),
            SourceKind::BaiduExperience => {
                article_url(trimmed, "jingyan.baidu.com", "jingyan.baidu.com")
            }
            SourceKind::Fixture => Some(trimmed.to_string()),
        }
    };
    native
        .map(|native_id| SourceId { source, native_id })
        .ok_or_else(|| UnrecognizedSource {
            kind: source,
            input: raw.to_string(),
        })
}
