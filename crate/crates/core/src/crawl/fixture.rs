//! Offline source backed by a manifest of local files.
//!
//! ```json
//! {"entries": [{
//!    "source": "youtube", "id": "https://youtu.be/abc",
//!    "keywords": ["Word changing font size"], "tags": [],
//!    "title": "...", "body": "...", "step_texts": [], "transcript": null,
//!    "images": [], "video": {"raw_stream": "videos/abc.rawf"}, "audio": "audio/abc.wav"
//! }]}
//! ```
//!
//! Paths are relative to the manifest. An entry with `video` is a video
//! tutorial, otherwise an article. `fail_download` simulates a broken item.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::adapter::{AdapterError, SourceAdapter};
use crate::store::BlobStore;
use crate::types::{
    canonicalize_source_id, ImageRef, Modality, RawTutorial, SourceId, SourceKind, TextBundle, Transcript,
    VideoSource, VisualBundle,
};
use crate::vision::{normalize_to_png, FrameDirReader, RawFrameReader};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FixtureVideo {
    RawStream(String),
    FrameDir(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureEntry {
    pub source: SourceKind,
    pub id: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub tags: Vec<String>,
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default)]
    pub step_texts: Vec<String>,
    #[serde(default)]
    pub transcript: Option<Transcript>,
    #[serde(default)]
    pub images: Vec<String>,
    #[serde(default)]
    pub video: Option<FixtureVideo>,
    #[serde(default)]
    pub audio: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fail_download: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureManifest {
    pub entries: Vec<FixtureEntry>,
}

pub struct FixtureAdapter {
    name: String,
    root: PathBuf,
    entries: Vec<(SourceId, FixtureEntry)>,
}

fn norm(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl FixtureAdapter {
    pub fn new(name: impl Into<String>, root: impl Into<PathBuf>, manifest: FixtureManifest) -> Result<Self, AdapterError> {
        let entries = manifest
            .entries
            .into_iter()
            .map(|e| {
                canonicalize_source_id(&e.id, e.source)
                    .map(|id| (id, e))
                    .map_err(|err| AdapterError::Search(err.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            name: name.into(),
            root: root.into(),
            entries,
        })
    }

    pub fn open(path: &Path) -> Result<Self, AdapterError> {
        let raw = fs::read(path).map_err(|e| AdapterError::Search(format!("{}: {e}", path.display())))?;
        let manifest: FixtureManifest =
            serde_json::from_slice(&raw).map_err(|e| AdapterError::Search(format!("{}: {e}", path.display())))?;
        let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::new("fixture", root, manifest)
    }

    fn matching(&self, pred: impl Fn(&FixtureEntry) -> bool) -> Vec<SourceId> {
        let mut out: Vec<SourceId> = Vec::new();
        for (id, e) in &self.entries {
            if pred(e) && !out.contains(id) {
                out.push(id.clone());
            }
        }
        out
    }

    fn build(&self, id: &SourceId, e: &FixtureEntry, store: &BlobStore) -> Result<RawTutorial, String> {
        let read = |rel: &str| fs::read(self.root.join(rel)).map_err(|err| format!("{rel}: {err}"));
        let textual = TextBundle {
            title: e.title.clone(),
            body: e.body.clone(),
            step_texts: e.step_texts.clone(),
            transcript: e.transcript.clone(),
        };
        let (modality, visual) = match &e.video {
            None => {
                let mut images = Vec::with_capacity(e.images.len());
                for rel in &e.images {
                    let bytes = read(rel)?;
                    // Undecodable images are kept as opaque blobs so the
                    // processing stage can drop them with a reason.
                    let r = match normalize_to_png(&bytes) {
                        Ok(png) => store.put_image(&png),
                        Err(_) => store.put_media(&bytes, "bin").map(|m| ImageRef(m.0)),
                    }
                    .map_err(|err| err.to_string())?;
                    images.push(r);
                }
                (Modality::Article, VisualBundle::Article { images })
            }
            Some(v) => {
                let (source, fps, frame_count) = match v {
                    FixtureVideo::RawStream(rel) => {
                        let bytes = read(rel)?;
                        let reader = RawFrameReader::new(&bytes[..]).map_err(|err| err.to_string())?;
                        let h = reader.header();
                        let count = ((bytes.len() - crate::vision::frame::RAW_HEADER_LEN) / h.frame_len()) as u64;
                        let media = store.put_media(&bytes, "rawf").map_err(|err| err.to_string())?;
                        (VideoSource::RawStream { media }, h.fps(), count)
                    }
                    FixtureVideo::FrameDir(rel) => {
                        let dir = self.root.join(rel);
                        let reader = FrameDirReader::open(&dir).map_err(|err| err.to_string())?;
                        let m = reader.manifest();
                        let path = dir.canonicalize().map_err(|err| err.to_string())?;
                        (
                            VideoSource::FrameDir {
                                path: path.to_string_lossy().into_owned(),
                            },
                            m.fps,
                            m.frames.len() as u64,
                        )
                    }
                };
                let audio = match &e.audio {
                    Some(rel) => {
                        let ext = Path::new(rel).extension().and_then(|x| x.to_str()).unwrap_or("bin");
                        Some(store.put_media(&read(rel)?, ext).map_err(|err| err.to_string())?)
                    }
                    None => None,
                };
                (
                    Modality::Video,
                    VisualBundle::Video {
                        source,
                        fps,
                        frame_count,
                        audio,
                    },
                )
            }
        };
        let t = RawTutorial {
            id: id.clone(),
            modality,
            textual,
            visual,
        };
        t.validate().map_err(|err| err.to_string())?;
        Ok(t)
    }
}

impl SourceAdapter for FixtureAdapter {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> SourceKind {
        SourceKind::Fixture
    }

    fn search(&self, keyword: &str) -> Result<Vec<SourceId>, AdapterError> {
        let k = norm(keyword);
        Ok(self.matching(|e| e.keywords.iter().any(|x| norm(x) == k)))
    }

    fn search_by_tag(&self, tag: &str) -> Option<Result<Vec<SourceId>, AdapterError>> {
        let t = norm(tag);
        Some(Ok(self.matching(|e| e.tags.iter().any(|x| norm(x) == t))))
    }

    fn download(&self, id: &SourceId, store: &BlobStore) -> Result<RawTutorial, AdapterError> {
        let (_, e) = self
            .entries
            .iter()
            .find(|(eid, _)| eid == id)
            .ok_or_else(|| AdapterError::NotFound(id.key()))?;
        let fail = |reason: String| AdapterError::Download { id: id.key(), reason };
        if e.fail_download {
            return Err(fail("simulated download failure".into()));
        }
        self.build(id, e, store).map_err(fail)
    }
}
