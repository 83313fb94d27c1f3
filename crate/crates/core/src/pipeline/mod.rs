//! Stage orchestration over a work directory.
//!
//! ```text
//! <work>/store/      shared content-addressed blobs
//! <work>/crawl/      keywords.json tutorials.jsonl drops.jsonl report.json
//! <work>/process/    processed.jsonl drops.jsonl report.json
//! <work>/generate/   candidates.jsonl generation.jsonl drops.jsonl report.json
//! <work>/filter/     verdicts.jsonl drops.jsonl counters.json retention.json report.json dataset/
//! <work>/sft/        sft.jsonl images/ report.json
//! <work>/stats/      stats.json
//! <work>/eval/       report.json
//! ```
//!
//! Each stage reads the previous stage's directory and refuses to write
//! into a non-empty output directory unless asked to overwrite it.

mod config;
pub mod fixtures;
mod io;
mod stages;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Value};
use thiserror::Error;

pub use config::{
    Config, ConfigError, CrawlConfig, EndpointConfig, EvalConfig, ExportConfig, Overrides, ProcessConfig,
    RunConfig, ServiceMode, ServicesConfig, YouTubeConfig,
};
pub use io::{read_jsonl, write_json, write_jsonl, DropRecord};
pub use stages::{
    CrawlStageReport, FilterStageReport, GenerateStageReport, Pipeline, ProcessStageReport, SftStageReport,
    VerdictRecord,
};

use crate::crawl::KeywordError;
use crate::dataset::DatasetError;
use crate::services::{HttpTransport, RecordingTransport, ReplayTransport, ServiceClient, Transport};
use crate::synth::{ScriptBook, ScriptedTransport};
use crate::types::CounterError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StageName {
    Crawl,
    Process,
    Generate,
    Filter,
    ExportSft,
    Stats,
    Eval,
}

impl StageName {
    pub const ALL: [StageName; 7] = [
        StageName::Crawl,
        StageName::Process,
        StageName::Generate,
        StageName::Filter,
        StageName::ExportSft,
        StageName::Stats,
        StageName::Eval,
    ];

    pub fn command(self) -> &'static str {
        match self {
            StageName::Crawl => "crawl",
            StageName::Process => "process",
            StageName::Generate => "generate",
            StageName::Filter => "filter",
            StageName::ExportSft => "export-sft",
            StageName::Stats => "stats",
            StageName::Eval => "eval",
        }
    }

    pub fn dir_name(self) -> &'static str {
        match self {
            StageName::ExportSft => "sft",
            other => other.command(),
        }
    }
}

pub const STORE_DIR: &str = "store";
pub const REPORT_FILE: &str = "report.json";
pub const DROPS_FILE: &str = "drops.jsonl";
pub const KEYWORDS_FILE: &str = "keywords.json";
pub const TUTORIALS_FILE: &str = "tutorials.jsonl";
pub const PROCESSED_FILE: &str = "processed.jsonl";
pub const CANDIDATES_FILE: &str = "candidates.jsonl";
pub const GENERATION_FILE: &str = "generation.jsonl";
pub const VERDICTS_FILE: &str = "verdicts.jsonl";
pub const COUNTERS_FILE: &str = "counters.json";
pub const RETENTION_FILE: &str = "retention.json";
pub const DATASET_DIR: &str = "dataset";
pub const SFT_FILE: &str = "sft.jsonl";
pub const STATS_FILE: &str = "stats.json";

#[derive(Debug, Clone)]
pub struct WorkDir {
    root: PathBuf,
}

impl WorkDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn store(&self) -> PathBuf {
        self.root.join(STORE_DIR)
    }

    pub fn stage(&self, s: StageName) -> PathBuf {
        self.root.join(s.dir_name())
    }

    pub fn dataset(&self) -> PathBuf {
        self.stage(StageName::Filter).join(DATASET_DIR)
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{stage}: missing input {path}; run the previous stage first")]
    StageInputMissing { stage: &'static str, path: PathBuf },
    #[error("{path} is not empty; pass --overwrite to replace it")]
    OutputExists { path: PathBuf },
    #[error("io on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {detail}")]
    Decode { path: PathBuf, line: usize, detail: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("keyword expansion: {0}")]
    Keywords(#[from] KeywordError),
    #[error("counters: {0}")]
    Counters(#[from] CounterError),
    #[error("{0}")]
    Setup(String),
}

impl PipelineError {
    pub fn io(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
        move |source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config_error",
            PipelineError::StageInputMissing { .. } => "stage_input_missing",
            PipelineError::OutputExists { .. } => "output_exists",
            PipelineError::Io { .. } => "io_error",
            PipelineError::Decode { .. } => "decode_error",
            PipelineError::Dataset(_) => "dataset_error",
            PipelineError::Keywords(_) => "keyword_error",
            PipelineError::Counters(_) => "counter_error",
            PipelineError::Setup(_) => "setup_error",
        }
    }

    /// Process exit code: 2 config, 3 missing stage input, 4 output exists, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::StageInputMissing { .. } => 3,
            PipelineError::OutputExists { .. } => 4,
            _ => 1,
        }
    }

    /// Machine-readable summary printed on failure.
    pub fn summary(&self) -> Value {
        let mut v = json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        match self {
            PipelineError::Config(e) => {
                if let Some(k) = e.key() {
                    v["key"] = json!(k);
                }
            }
            PipelineError::StageInputMissing { stage, path } => {
                v["stage"] = json!(stage);
                v["path"] = json!(path.display().to_string());
            }
            PipelineError::OutputExists { path } | PipelineError::Io { path, .. } | PipelineError::Decode { path, .. } => {
                v["path"] = json!(path.display().to_string());
            }
            _ => {}
        }
        v
    }
}

/// One client per model service.
pub struct Services {
    pub llm: ServiceClient,
    pub asr: Option<ServiceClient>,
    pub vlm: ServiceClient,
    pub agent: ServiceClient,
    pub judge: ServiceClient,
}

impl Services {
    /// Every client shares `transport`.
    pub fn with_transport(cfg: &ServicesConfig, transport: Arc<dyn Transport>) -> Self {
        let client = |name: &str, ep: &EndpointConfig| ServiceClient::new(name, ep.endpoint(), transport.clone());
        Services {
            llm: client("llm", &cfg.llm),
            asr: cfg.asr.as_ref().map(|ep| client("asr", ep)),
            vlm: client("vlm", &cfg.vlm),
            agent: client("agent", &cfg.agent),
            judge: client("judge", &cfg.judge),
        }
    }

    pub fn from_config(cfg: &ServicesConfig) -> Result<Self, PipelineError> {
        Ok(Services::with_transport(cfg, transport_for(cfg)?))
    }
}

fn load_script(path: &Path) -> Result<ScriptBook, PipelineError> {
    let raw = std::fs::read(path).map_err(PipelineError::io(path))?;
    serde_json::from_slice(&raw).map_err(|e| PipelineError::Decode {
        path: path.to_path_buf(),
        line: e.line(),
        detail: e.to_string(),
    })
}

/// The transport selected by `services.mode`.
pub fn transport_for(cfg: &ServicesConfig) -> Result<Arc<dyn Transport>, PipelineError> {
    let replay_dir = || {
        cfg.replay_dir
            .clone()
            .ok_or_else(|| ConfigError::invalid("services.replay_dir", "required for this mode"))
    };
    let live = || -> Result<Arc<dyn Transport>, PipelineError> {
        Ok(Arc::new(HttpTransport::new().map_err(|e| PipelineError::Setup(e.to_string()))?))
    };
    Ok(match cfg.mode {
        ServiceMode::Live => live()?,
        ServiceMode::Replay => Arc::new(ReplayTransport::new(replay_dir()?)),
        ServiceMode::Record => {
            let dir = replay_dir()?;
            Arc::new(RecordingTransport::new(live()?, &dir).map_err(PipelineError::io(&dir))?)
        }
        ServiceMode::Scripted => {
            let path = cfg
                .script
                .clone()
                .ok_or_else(|| ConfigError::invalid("services.script", "required for this mode"))?;
            Arc::new(ScriptedTransport::new(load_script(&path)?))
        }
    })
}
