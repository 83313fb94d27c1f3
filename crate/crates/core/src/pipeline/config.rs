//! The run configuration: one TOML file for every stage.
//!
//! Relative paths are resolved against the directory holding the file.
//! Unknown keys are rejected, and every error names the offending key.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crawl::{CrawlLimits, TaskSeed};
use crate::filter::{FilterConfig, MAX_JUDGE_IMAGES};
use crate::generate::GenerationConfig;
use crate::services::ServiceEndpoint;
use crate::text::DEFAULT_MAX_STEPS;
use crate::vision::KeyframeParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Dotted path of the offending key, when known.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { key, .. } => Some(key),
            ConfigError::Io { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceMode {
    #[default]
    Live,
    /// Live calls, with every reply written to `replay_dir`.
    Record,
    /// Recorded replies only; no network.
    Replay,
    /// Replies computed in-process from a script file.
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    #[serde(default)]
    pub model: Option<String>,
    /// Environment variable holding the bearer token.
    #[serde(default)]
    pub auth_token_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub requests_per_minute: u32,
    #[serde(default)]
    pub jitter_seed: u64,
}

fn default_timeout() -> f64 {
    60.0
}

fn default_retries() -> u32 {
    3
}

impl EndpointConfig {
    pub fn endpoint(&self) -> ServiceEndpoint {
        ServiceEndpoint {
            base_url: self.base_url.clone(),
            model: self.model.clone(),
            auth_token: self.auth_token_env.as_ref().and_then(|v| std::env::var(v).ok()),
            timeout_s: self.timeout_s,
            max_retries: self.max_retries,
            requests_per_minute: self.requests_per_minute,
            jitter_seed: self.jitter_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServicesConfig {
    #[serde(default)]
    pub mode: ServiceMode,
    #[serde(default)]
    pub replay_dir: Option<PathBuf>,
    #[serde(default)]
    pub script: Option<PathBuf>,
    pub llm: EndpointConfig,
    /// Speech recognition. Without it, videos lacking captions have no transcript.
    #[serde(default)]
    pub asr: Option<EndpointConfig>,
    pub vlm: EndpointConfig,
    pub agent: EndpointConfig,
    pub judge: EndpointConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset version written to the manifest.
    pub version: String,
    /// Timestamp written to the manifest. Fixed so reruns are byte-identical.
    pub created_at: String,
    /// Worker threads; 0 means available parallelism.
    pub workers: usize,
    /// Root of the stage directories and the shared blob store.
    pub work_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: "0.1.0".into(),
            created_at: "1970-01-01T00:00:00Z".into(),
            workers: 0,
            work_dir: PathBuf::from("work"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YouTubeConfig {
    pub api_base: String,
    pub api_key_env: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrawlConfig {
    /// `(app_or_web, task)` seeds expanded by the LLM into keywords.
    pub seeds: Vec<TaskSeed>,
    /// Expanded keyword count requested; at least the seed count.
    pub keyword_target: usize,
    /// Keywords searched verbatim, after the expanded ones.
    pub keywords: Vec<String>,
    /// Category tags listed on sources that support them.
    pub tags: Vec<String>,
    /// Results taken from one source for one keyword or tag.
    pub per_keyword: Option<usize>,
    /// Results taken from one source over the whole crawl.
    pub per_source: Option<usize>,
    /// Fixture manifests, each served by an offline adapter.
    pub fixtures: Vec<PathBuf>,
    pub youtube: Option<YouTubeConfig>,
}

impl CrawlConfig {
    pub fn limits(&self) -> CrawlLimits {
        CrawlLimits {
            per_keyword: self.per_keyword,
            per_source: self.per_source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessConfig {
    pub max_steps: usize,
    pub keyframes: KeyframeParams,
}

impl Default for ProcessConfig {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            keyframes: KeyframeParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    /// Previous steps included in each SFT sample.
    pub history: usize,
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self { history: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// JSONL of evaluation records.
    pub records: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub crawl: CrawlConfig,
    pub services: ServicesConfig,
    #[serde(default)]
    pub process: ProcessConfig,
    #[serde(default)]
    pub generate: GenerationConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub export: ExportConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub work_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub mode: Option<ServiceMode>,
    pub replay_dir: Option<PathBuf>,
    pub history_window: Option<usize>,
    pub stateless: bool,
    pub judge_images: Option<usize>,
    pub export_history: Option<usize>,
    pub eval_records: Option<PathBuf>,
}

impl Config {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Config, ConfigError> {
        let de = toml::Deserializer::new(text);
        let mut cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let message = e.inner().message().to_string();
            ConfigError::Invalid {
                key: if key == "." { String::new() } else { key },
                message,
            }
        })?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Config::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.run.work_dir);
        self.crawl.fixtures.iter_mut().for_each(fix);
        self.services.replay_dir.iter_mut().for_each(fix);
        self.services.script.iter_mut().for_each(fix);
        self.eval.records.iter_mut().for_each(fix);
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(d) = &o.work_dir {
            self.run.work_dir = d.clone();
        }
        if let Some(w) = o.workers {
            self.run.workers = w;
        }
        if let Some(m) = o.mode {
            self.services.mode = m;
        }
        if let Some(d) = &o.replay_dir {
            self.services.replay_dir = Some(d.clone());
        }
        if let Some(h) = o.history_window {
            self.generate.history_window = h;
        }
        if o.stateless {
            self.generate.stateless = true;
        }
        if let Some(j) = o.judge_images {
            self.filter.judge_images = j;
        }
        if let Some(n) = o.export_history {
            self.export.history = n;
        }
        if let Some(r) = &o.eval_records {
            self.eval.records = Some(r.clone());
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.services;
        let endpoints = [
            ("services.llm", Some(&s.llm)),
            ("services.asr", s.asr.as_ref()),
            ("services.vlm", Some(&s.vlm)),
            ("services.agent", Some(&s.agent)),
            ("services.judge", Some(&s.judge)),
        ];
        for (key, ep) in endpoints {
            if let Some(ep) = ep {
                ep.endpoint()
                    .validate()
                    .map_err(|e| ConfigError::invalid(key, e.to_string()))?;
            }
        }
        let need = |field: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(ConfigError::invalid(
                    field,
                    format!("required when services.mode is {:?}", s.mode).to_lowercase(),
                ))
            }
        };
        match s.mode {
            ServiceMode::Record | ServiceMode::Replay => need("services.replay_dir", s.replay_dir.is_some())?,
            ServiceMode::Scripted => need("services.script", s.script.is_some())?,
            ServiceMode::Live => {}
        }
        if !self.crawl.seeds.is_empty() && self.crawl.keyword_target < self.crawl.seeds.len() {
            return Err(ConfigError::invalid(
                "crawl.keyword_target",
                format!("must be at least the {} seeds", self.crawl.seeds.len()),
            ));
        }
        for (i, seed) in self.crawl.seeds.iter().enumerate() {
            seed.validate()
                .map_err(|e| ConfigError::invalid(format!("crawl.seeds[{i}]"), e.to_string()))?;
        }
        if self.process.max_steps == 0 {
            return Err(ConfigError::invalid("process.max_steps", "must be at least 1"));
        }
        if self.process.keyframes.keep_per_segment == 0 {
            return Err(ConfigError::invalid("process.keyframes.keep_per_segment", "must be at least 1"));
        }
        self.process
            .keyframes
            .saliency
            .gmm
            .validate()
            .map_err(|e| ConfigError::invalid("process.keyframes.saliency.gmm", e.to_string()))?;
        let sal = &self.process.keyframes.saliency;
        if !(0.0 <= sal.rho_off && sal.rho_off < sal.rho_on && sal.rho_on <= 1.0) {
            return Err(ConfigError::invalid(
                "process.keyframes.saliency",
                "need 0 <= rho_off < rho_on <= 1",
            ));
        }
        if !(1..=MAX_JUDGE_IMAGES).contains(&self.filter.judge_images) {
            return Err(ConfigError::invalid(
                "filter.judge_images",
                format!("must be in 1..={MAX_JUDGE_IMAGES}"),
            ));
        }
        Ok(())
    }

    pub fn workers(&self) -> usize {
        if self.run.workers > 0 {
            self.run.workers
        } else {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        }
    }
}
