//! Minimal live YouTube source: keyword search through the Data API.
//! Downloading media is left to external tools, so `download` is unsupported.

use std::time::Duration;

use serde_json::Value;

use super::adapter::{AdapterError, SourceAdapter};
use crate::store::BlobStore;
use crate::types::{canonicalize_source_id, RawTutorial, SourceId, SourceKind};

pub const YOUTUBE_API_BASE: &str = "https://www.googleapis.com/youtube/v3/";

pub struct YouTubeAdapter {
    api_base: String,
    api_key: String,
    max_results: u32,
    http: reqwest::blocking::Client,
}

impl YouTubeAdapter {
    pub fn new(api_base: impl Into<String>, api_key: impl Into<String>) -> Result<Self, AdapterError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| AdapterError::Search(e.to_string()))?;
        Ok(Self {
            api_base: api_base.into(),
            api_key: api_key.into(),
            max_results: 25,
            http,
        })
    }

    pub fn search_url(&self, keyword: &str) -> String {
        let mut u = url::Url::parse(&self.api_base)
            .and_then(|b| b.join("search"))
            .expect("valid api base");
        u.query_pairs_mut()
            .append_pair("part", "snippet")
            .append_pair("type", "video")
            .append_pair("maxResults", &self.max_results.to_string())
            .append_pair("q", keyword)
            .append_pair("key", &self.api_key);
        u.into()
    }
}

/// Video ids from a `search.list` response, first occurrence only.
pub fn parse_search_response(body: &str) -> Result<Vec<SourceId>, AdapterError> {
    let v: Value = serde_json::from_str(body).map_err(|e| AdapterError::Search(e.to_string()))?;
    let items = v
        .get("items")
        .and_then(Value::as_array)
        .ok_or_else(|| AdapterError::Search("response has no items array".into()))?;
    let mut out: Vec<SourceId> = Vec::new();
    for it in items {
        let Some(vid) = it.pointer("/id/videoId").and_then(Value::as_str) else {
            continue;
        };
        if let Ok(id) = canonicalize_source_id(vid, SourceKind::YouTube) {
            if !out.contains(&id) {
                out.push(id);
            }
        }
    }
    Ok(out)
}

impl SourceAdapter for YouTubeAdapter {
    fn name(&self) -> &str {
        "youtube"
    }

    fn kind(&self) -> SourceKind {
        SourceKind::YouTube
    }

    fn search(&self, keyword: &str) -> Result<Vec<SourceId>, AdapterError> {
        let resp = self
            .http
            .get(self.search_url(keyword))
            .send()
            .map_err(|e| AdapterError::Search(e.to_string()))?;
        let status = resp.status();
        let body = resp.text().map_err(|e| AdapterError::Search(e.to_string()))?;
        if !status.is_success() {
            return Err(AdapterError::Search(format!("status {status}")));
        }
        parse_search_response(&body)
    }

    fn download(&self, _id: &SourceId, _store: &BlobStore) -> Result<RawTutorial, AdapterError> {
        Err(AdapterError::Unsupported("video download"))
    }
}
