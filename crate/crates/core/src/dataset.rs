//! On-disk dataset format, SFT sample rendering and dataset statistics.
//!
//! A dataset directory holds `trajectories.jsonl` (one trajectory per line,
//! fixed key order, coordinates with four decimals), `manifest.json`, and
//! `images/` with every referenced observation stored as `<sha256>.png`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{serialize_actions, serialize_thought_action};
use crate::services::prompts::agent_system_prompt;
use crate::store::BlobStore;
use crate::types::{
    step_bucket, HistoryEntry, PipelineCounters, SftSample, Trajectory, TrajectoryError, STEP_BUCKETS,
};

pub const TRAJECTORIES_FILE: &str = "trajectories.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const IMAGES_DIR: &str = "images";
pub const SCHEMA_VERSION: &str = "tutraj-dataset/1";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {detail}")]
    SchemaViolation { line: usize, detail: String },
    #[error("refusing to write invalid trajectory {id}: {source}")]
    InvalidTrajectory {
        id: String,
        #[source]
        source: TrajectoryError,
    },
    #[error("manifest: {0}")]
    Manifest(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Limits the downstream trainer is expected to honour. Informational only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingAdvisory {
    pub context_window: u32,
    pub max_previous_observations: u32,
    pub max_vision_tokens_per_image: u32,
}

impl Default for TrainingAdvisory {
    fn default() -> Self {
        Self {
            context_window: 8192,
            max_previous_observations: 2,
            max_vision_tokens_per_image: 1350,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema: String,
    pub version: String,
    pub trajectory_count: u64,
    pub step_count: u64,
    pub image_count: u64,
    pub image_store: String,
    /// Trajectory counts per provenance source kind.
    pub sources: BTreeMap<String, u64>,
    pub created_at: String,
    pub advisory: TrainingAdvisory,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetMeta {
    pub version: String,
    pub created_at: String,
}

/// Write trajectories and copy their images from `images_from`. Every
/// trajectory is validated first; nothing invalid reaches the file.
pub fn write_dataset<I>(
    trajs: I,
    dir: &Path,
    images_from: &BlobStore,
    meta: &DatasetMeta,
) -> Result<DatasetManifest, DatasetError>
where
    I: IntoIterator<Item = Trajectory>,
{
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let images = BlobStore::open(dir.join(IMAGES_DIR)).map_err(io_err(dir))?;
    let path = dir.join(TRAJECTORIES_FILE);
    let mut out = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
    let mut manifest = DatasetManifest {
        schema: SCHEMA_VERSION.to_string(),
        version: meta.version.clone(),
        trajectory_count: 0,
        step_count: 0,
        image_count: 0,
        image_store: IMAGES_DIR.to_string(),
        sources: BTreeMap::new(),
        created_at: meta.created_at.clone(),
        advisory: TrainingAdvisory::default(),
    };
    let mut seen_images = std::collections::BTreeSet::new();
    for t in trajs {
        t.validate().map_err(|source| DatasetError::InvalidTrajectory {
            id: t.id.clone(),
            source,
        })?;
        for s in &t.steps {
            if seen_images.insert(s.observation.0.clone()) {
                images_from
                    .copy_to(&s.observation.0, &images)
                    .map_err(io_err(&images_from.path_of(&s.observation.0)))?;
            }
        }
        let line = serde_json::to_string(&t).expect("trajectory serialization");
        writeln!(out, "{line}").map_err(io_err(&path))?;
        manifest.trajectory_count += 1;
        manifest.step_count += t.steps.len() as u64;
        *manifest.sources.entry(t.provenance.source.to_string()).or_default() += 1;
    }
    out.flush().map_err(io_err(&path))?;
    manifest.image_count = seen_images.len() as u64;
    let mpath = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialization");
    fs::write(&mpath, text + "\n").map_err(io_err(&mpath))?;
    Ok(manifest)
}

/// Decode one dataset line, enforcing every trajectory invariant.
pub fn parse_line(line: &str, lineno: usize) -> Result<Trajectory, DatasetError> {
    let t: Trajectory = serde_json::from_str(line).map_err(|e| DatasetError::SchemaViolation {
        line: lineno,
        detail: e.to_string(),
    })?;
    t.validate().map_err(|e| DatasetError::SchemaViolation {
        line: lineno,
        detail: e.to_string(),
    })?;
    Ok(t)
}

pub struct DatasetReader {
    path: PathBuf,
    lines: io::Lines<BufReader<File>>,
    lineno: usize,
}

impl Iterator for DatasetReader {
    type Item = Result<Trajectory, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.lineno += 1;
            let line = match line {
                Ok(l) => l,
                Err(source) => {
                    return Some(Err(DatasetError::Io {
                        path: self.path.clone(),
                        source,
                    }))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            return Some(parse_line(&line, self.lineno));
        }
    }
}

/// Stream trajectories from a dataset directory (or a JSONL file).
pub fn read_dataset(path: &Path) -> Result<DatasetReader, DatasetError> {
    let file_path = if path.is_dir() { path.join(TRAJECTORIES_FILE) } else { path.to_path_buf() };
    let f = File::open(&file_path).map_err(io_err(&file_path))?;
    Ok(DatasetReader {
        path: file_path,
        lines: BufReader::new(f).lines(),
        lineno: 0,
    })
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest, DatasetError> {
    let p = dir.join(MANIFEST_FILE);
    let raw = fs::read(&p).map_err(io_err(&p))?;
    serde_json::from_slice(&raw).map_err(|e| DatasetError::Manifest(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {step} outside 1..={len}")]
pub struct IndexOutOfRange {
    pub step: usize,
    pub len: usize,
}

/// Sample for step `i` (1-based): up to `n` preceding steps as history.
pub fn render_sft_sample(traj: &Trajectory, i: usize, n: usize) -> Result<SftSample, IndexOutOfRange> {
    if i == 0 || i > traj.steps.len() {
        return Err(IndexOutOfRange {
            step: i,
            len: traj.steps.len(),
        });
    }
    let first = i - (i - 1).min(n);
    let history = (first..i)
        .map(|j| {
            let s = &traj.steps[j - 1];
            HistoryEntry {
                step: j,
                observation: s.observation.clone(),
                thought: s.thought_action.thought.clone(),
                actions: serialize_actions(&s.thought_action.actions),
            }
        })
        .collect();
    let cur = &traj.steps[i - 1];
    Ok(SftSample {
        trajectory_id: traj.id.clone(),
        step: i,
        task: traj.task.clone(),
        platform: traj.platform,
        n,
        history,
        current_observation: cur.observation.clone(),
        target: cur.thought_action.clone(),
    })
}

pub const IMAGE_PLACEHOLDER: &str = "<image>";

/// Prompt text: system prompt, the task, then each history step as an
/// image placeholder followed by its thought and action, then the
/// current image placeholder. Images appear in [`SftSample::images`] order.
pub fn render_prompt(sample: &SftSample) -> String {
    let mut s = agent_system_prompt(sample.platform);
    s.push_str("\n\nTask: ");
    s.push_str(&sample.task);
    s.push('\n');
    for h in &sample.history {
        s.push_str(IMAGE_PLACEHOLDER);
        s.push('\n');
        s.push_str(&format!("Thought: {}\nAction: {}\n", h.thought, h.actions));
    }
    s.push_str(IMAGE_PLACEHOLDER);
    s
}

/// One exported training line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftLine {
    #[serde(flatten)]
    pub sample: SftSample,
    pub images: Vec<String>,
    pub prompt: String,
    pub response: String,
}

impl SftLine {
    pub fn new(sample: SftSample) -> Self {
        let images = sample.images().into_iter().map(|r| format!("{IMAGES_DIR}/{}", r.0)).collect();
        let prompt = render_prompt(&sample);
        let response = serialize_thought_action(&sample.target);
        Self {
            sample,
            images,
            prompt,
            response,
        }
    }
}

/// One sample per step of every trajectory, in dataset then step order.
pub fn export_sft<I>(trajs: I, n: usize) -> impl Iterator<Item = Result<SftLine, DatasetError>>
where
    I: IntoIterator<Item = Result<Trajectory, DatasetError>>,
{
    trajs.into_iter().flat_map(move |t| -> Vec<Result<SftLine, DatasetError>> {
        match t {
            Err(e) => vec![Err(e)],
            Ok(t) => (1..=t.steps.len())
                .map(|i| Ok(SftLine::new(render_sft_sample(&t, i, n).expect("index in range"))))
                .collect(),
        }
    })
}

pub fn write_sft<I>(lines: I, path: &Path) -> Result<u64, DatasetError>
where
    I: IntoIterator<Item = Result<SftLine, DatasetError>>,
{
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let mut count = 0;
    for l in lines {
        let l = l?;
        writeln!(out, "{}", serde_json::to_string(&l).expect("sft serialization")).map_err(io_err(path))?;
        count += 1;
    }
    out.flush().map_err(io_err(path))?;
    Ok(count)
}

/// Histograms of one trajectory; merged across the dataset.
pub fn trajectory_counters(t: &Trajectory) -> PipelineCounters {
    let mut c = PipelineCounters::default();
    c.steps.insert(step_bucket(t.steps.len()), 1);
    c.platforms.insert(t.platform.as_str().to_string(), 1);
    for s in &t.steps {
        for a in &s.thought_action.actions {
            *c.action_kinds.entry(a.kind.wire_name().to_string()).or_default() += 1;
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub count: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub trajectories: u64,
    pub steps: u64,
    pub actions: u64,
    pub platforms: BTreeMap<String, HistogramRow>,
    /// Keyed "1".."8", "9+"; every bucket present.
    pub step_lengths: BTreeMap<String, HistogramRow>,
    pub action_kinds: BTreeMap<String, HistogramRow>,
}

fn rows(h: &BTreeMap<String, u64>, keys: Option<&[&str]>) -> BTreeMap<String, HistogramRow> {
    let total: u64 = h.values().sum();
    let row = |count: u64| HistogramRow {
        count,
        percent: if total == 0 {
            0.0
        } else {
            (count as f64 * 10000.0 / total as f64).round() / 100.0
        },
    };
    match keys {
        Some(ks) => ks
            .iter()
            .map(|k| (k.to_string(), row(h.get(*k).copied().unwrap_or(0))))
            .collect(),
        None => h.iter().map(|(k, v)| (k.clone(), row(*v))).collect(),
    }
}

impl StatsReport {
    /// `steps` is passed separately because the "9+" bucket hides exact lengths.
    pub fn new(c: &PipelineCounters, steps: u64) -> Self {
        Self {
            trajectories: c.steps.values().sum(),
            steps,
            actions: c.action_kinds.values().sum(),
            platforms: rows(&c.platforms, None),
            step_lengths: rows(&c.steps, Some(&STEP_BUCKETS)),
            action_kinds: rows(&c.action_kinds, None),
        }
    }
}

/// Dataset statistics via an associative merge of per-trajectory partials.
pub fn compute_stats(trajs: &[Trajectory]) -> StatsReport {
    let merged = trajs
        .par_iter()
        .map(trajectory_counters)
        .reduce(PipelineCounters::default, |a, b| a.merge(&b));
    StatsReport::new(&merged, trajs.iter().map(|t| t.steps.len() as u64).sum())
}
