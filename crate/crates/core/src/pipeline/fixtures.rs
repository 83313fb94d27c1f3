//! Self-contained offline bundles: a synthetic corpus, a config that runs
//! it against recorded replies, and the replay directory itself.
//!
//! Replies are produced by the scripted services and recorded while the
//! whole pipeline runs once, so a replay run issues exactly the recorded
//! requests.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::io::{prepare_output, write_json};
use super::*;
use crate::filter::{FilterConfig, RetentionReport};
use crate::generate::GenerationConfig;
use crate::synth::corpus::{MANIFEST_NAME, SCRIPT_NAME};
use crate::synth::{write_corpus, CorpusPlan, ScriptedTransport};

pub const CONFIG_NAME: &str = "config.toml";
pub const REPLAY_DIR: &str = "replay";
pub const SUMMARY_NAME: &str = "bundle.json";
const RECORD_WORK: &str = ".record-work";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleSummary {
    pub replay_entries: u64,
    /// Requests the script had no rule for, answered with HTTP 404.
    pub unscripted_requests: u64,
    pub retention: RetentionReport,
}

fn endpoint(model: &str) -> EndpointConfig {
    EndpointConfig {
        base_url: "http://127.0.0.1:8089/v1".into(),
        model: Some(model.into()),
        auth_token_env: None,
        timeout_s: 60.0,
        max_retries: 2,
        requests_per_minute: 0,
        jitter_seed: 7,
    }
}

/// Replay-mode config for a bundle written by [`write_bundle`]; paths are
/// relative to the bundle directory.
pub fn bundle_config(plan: &CorpusPlan) -> Config {
    Config {
        run: RunConfig {
            version: "0.1.0".into(),
            created_at: "2024-01-01T00:00:00Z".into(),
            workers: 0,
            work_dir: PathBuf::from("work"),
        },
        crawl: CrawlConfig {
            seeds: plan.seeds.clone(),
            keyword_target: plan.keyword_target,
            keywords: plan.keywords.clone(),
            tags: plan.tags.clone(),
            per_keyword: None,
            per_source: None,
            fixtures: vec![PathBuf::from(MANIFEST_NAME)],
            youtube: None,
        },
        services: ServicesConfig {
            mode: ServiceMode::Replay,
            replay_dir: Some(PathBuf::from(REPLAY_DIR)),
            script: Some(PathBuf::from(SCRIPT_NAME)),
            llm: endpoint("tutorial-llm"),
            asr: Some(endpoint("tutorial-asr")),
            vlm: endpoint("tutorial-vlm"),
            agent: endpoint("gui-agent"),
            judge: endpoint("trajectory-judge"),
        },
        process: ProcessConfig::default(),
        generate: GenerationConfig::default(),
        filter: FilterConfig::default(),
        export: ExportConfig::default(),
        eval: EvalConfig::default(),
    }
}

pub fn render_config(cfg: &Config) -> String {
    toml::to_string(cfg).expect("config serialization")
}

/// Write the corpus, config, script and freshly recorded replies into `dir`.
pub fn write_bundle(plan: &CorpusPlan, dir: &Path, overwrite: bool) -> Result<BundleSummary, PipelineError> {
    prepare_output(dir, overwrite)?;
    let book = write_corpus(plan, dir).map_err(PipelineError::io(dir))?;
    let cfg_path = dir.join(CONFIG_NAME);
    fs::write(&cfg_path, render_config(&bundle_config(plan))).map_err(PipelineError::io(&cfg_path))?;

    let mut cfg = Config::load(&cfg_path)?;
    let work = dir.join(RECORD_WORK);
    cfg.run.work_dir = work.clone();
    let scripted = Arc::new(ScriptedTransport::new(book));
    let replay = dir.join(REPLAY_DIR);
    let recorder = RecordingTransport::new(scripted.clone(), &replay).map_err(PipelineError::io(&replay))?;
    let services = Services::with_transport(&cfg.services, Arc::new(recorder));
    let retention = Pipeline::with_services(cfg, services, true)?.run_all();
    fs::remove_dir_all(&work).map_err(PipelineError::io(&work))?;
    let retention = retention?;

    let replay_entries = fs::read_dir(&replay).map_err(PipelineError::io(&replay))?.count() as u64;
    let summary = BundleSummary {
        replay_entries,
        unscripted_requests: scripted.misses() as u64,
        retention,
    };
    write_json(&dir.join(SUMMARY_NAME), &summary)?;
    Ok(summary)
}
