use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::{info, info_span, warn};

use super::io::{prepare_output, read_json, read_jsonl, require_input, write_json, write_jsonl, DropRecord};
use super::*;
use crate::crawl::{
    crawl_corpus, dedup_tutorials, expand_keywords, CrawlReport, FixtureAdapter, SourceAdapter, YouTubeAdapter,
};
use crate::dataset::{
    compute_stats, export_sft, read_dataset, trajectory_counters, write_dataset, write_sft, DatasetMeta,
    DatasetManifest, IMAGES_DIR,
};
use crate::eval::{aggregate, EvalRecord};
use crate::filter::{trajectory_quality_filter, RetentionReport, TrajectoryAccounting};
use crate::generate::{align_steps, generate_trajectory, split_ranges, split_trajectory, AlignmentPolicy, GenerationRecord, StepResult};
use crate::store::BlobStore;
use crate::text::{assemble_text, classify_platform, content_filter, extract_task_and_steps, PlatformClass};
use crate::types::{
    DropReason, ImageRef, PipelineCounters, ProcessedTutorial, RawTutorial, Stage, Trajectory, Verdict,
    VideoSource, VisualBundle,
};
use crate::vision::{
    classify_screenshot, extract_keyframes, store_keyframes, Frame, FrameDirReader, FrameError, RawFrameReader,
    SegmentSpec,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlStageReport {
    pub keywords: Vec<String>,
    /// The expansion reply was unusable and only seeds were searched.
    pub malformed_keyword_response: bool,
    pub tags: Vec<String>,
    pub crawled: u64,
    pub after_dedup: u64,
    pub dropped: BTreeMap<DropReason, u64>,
    pub crawl: CrawlReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessStageReport {
    pub input: u64,
    pub after_content_filter: u64,
    pub processed: u64,
    pub transcript_missing: u64,
    pub alignment: BTreeMap<String, u64>,
    pub dropped: BTreeMap<DropReason, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateStageReport {
    pub tutorials: u64,
    pub with_trajectories: u64,
    pub trajectories: u64,
    /// Step outcome counts keyed by outcome kind.
    pub steps: BTreeMap<String, u64>,
    pub dropped: BTreeMap<DropReason, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterStageReport {
    pub candidates: u64,
    pub kept: u64,
    pub tutorials_kept: u64,
    pub dropped: BTreeMap<DropReason, u64>,
    pub dataset: DatasetManifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftStageReport {
    pub trajectories: u64,
    pub samples: u64,
    pub history: usize,
    pub images: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub trajectory: String,
    pub tutorial: String,
    #[serde(flatten)]
    pub verdict: Verdict,
}

fn tally<'a>(drops: impl IntoIterator<Item = &'a DropRecord>) -> BTreeMap<DropReason, u64> {
    let mut m = BTreeMap::new();
    for d in drops {
        *m.entry(d.reason).or_default() += 1;
    }
    m
}

/// What processing one tutorial produced.
struct ProcessOutcome {
    content_passed: bool,
    transcript_missing: bool,
    result: Result<(ProcessedTutorial, AlignmentPolicy), (DropReason, String)>,
}

pub struct Pipeline {
    cfg: Config,
    work: WorkDir,
    services: Services,
    store: BlobStore,
    pool: rayon::ThreadPool,
    overwrite: bool,
}

impl Pipeline {
    /// Services are built from `services.mode`.
    pub fn new(cfg: Config, overwrite: bool) -> Result<Self, PipelineError> {
        let services = Services::from_config(&cfg.services)?;
        Pipeline::with_services(cfg, services, overwrite)
    }

    pub fn with_services(cfg: Config, services: Services, overwrite: bool) -> Result<Self, PipelineError> {
        let work = WorkDir::new(cfg.run.work_dir.clone());
        let store_dir = work.store();
        let store = BlobStore::open(&store_dir).map_err(PipelineError::io(&store_dir))?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers())
            .build()
            .map_err(|e| PipelineError::Setup(e.to_string()))?;
        Ok(Self {
            cfg,
            work,
            services,
            store,
            pool,
            overwrite,
        })
    }

    pub fn work(&self) -> &WorkDir {
        &self.work
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    fn output(&self, s: StageName) -> Result<PathBuf, PipelineError> {
        let dir = self.work.stage(s);
        prepare_output(&dir, self.overwrite)?;
        Ok(dir)
    }

    fn input(&self, stage: StageName, from: StageName, file: &str) -> Result<PathBuf, PipelineError> {
        let p = self.work.stage(from).join(file);
        require_input(stage.command(), &p)?;
        Ok(p)
    }

    fn adapters(&self) -> Result<Vec<Box<dyn SourceAdapter>>, PipelineError> {
        let mut out: Vec<Box<dyn SourceAdapter>> = Vec::new();
        for (i, path) in self.cfg.crawl.fixtures.iter().enumerate() {
            let a = FixtureAdapter::open(path)
                .map_err(|e| ConfigError::invalid(format!("crawl.fixtures[{i}]"), e.to_string()))?;
            out.push(Box::new(a));
        }
        if let Some(yt) = &self.cfg.crawl.youtube {
            let key = std::env::var(&yt.api_key_env).map_err(|_| {
                ConfigError::invalid("crawl.youtube.api_key_env", format!("environment variable {} is not set", yt.api_key_env))
            })?;
            let a = YouTubeAdapter::new(&yt.api_base, key)
                .map_err(|e| ConfigError::invalid("crawl.youtube.api_base", e.to_string()))?;
            out.push(Box::new(a));
        }
        Ok(out)
    }

    pub fn crawl(&self) -> Result<CrawlStageReport, PipelineError> {
        let c = &self.cfg.crawl;
        let adapters = self.adapters()?;
        let out = self.output(StageName::Crawl)?;

        let (mut keywords, malformed) = if c.seeds.is_empty() {
            (Vec::new(), false)
        } else {
            let exp = self
                .pool
                .install(|| expand_keywords(&c.seeds, &self.services.llm, c.keyword_target))?;
            (exp.keywords, exp.malformed_response)
        };
        for k in &c.keywords {
            if !keywords.contains(k) {
                keywords.push(k.clone());
            }
        }
        let refs: Vec<&dyn SourceAdapter> = adapters.iter().map(|a| a.as_ref()).collect();
        let (crawled, crawl_report) = self
            .pool
            .install(|| crawl_corpus(&refs, &keywords, &c.tags, c.limits(), &self.store));

        let unique = dedup_tutorials(crawled.clone());
        let mut drops = Vec::new();
        let mut next = unique.iter().peekable();
        for t in &crawled {
            if next.peek() == Some(&t) {
                next.next();
            } else {
                drops.push(DropRecord::new("crawl", t.id.key(), DropReason::Duplicate, "same canonical id crawled earlier"));
            }
        }

        write_json(&out.join(KEYWORDS_FILE), &keywords)?;
        write_jsonl(&out.join(TUTORIALS_FILE), &unique)?;
        write_jsonl(&out.join(DROPS_FILE), &drops)?;
        let report = CrawlStageReport {
            keywords,
            malformed_keyword_response: malformed,
            tags: c.tags.clone(),
            crawled: crawled.len() as u64,
            after_dedup: unique.len() as u64,
            dropped: tally(&drops),
            crawl: crawl_report,
        };
        write_json(&out.join(REPORT_FILE), &report)?;
        info!(stage = "crawl", crawled = report.crawled, after_dedup = report.after_dedup, "stage finished");
        Ok(report)
    }

    pub fn process(&self) -> Result<ProcessStageReport, PipelineError> {
        let input = self.input(StageName::Process, StageName::Crawl, TUTORIALS_FILE)?;
        let tutorials: Vec<RawTutorial> = read_jsonl(&input)?;
        let out = self.output(StageName::Process)?;

        let outcomes: Vec<ProcessOutcome> = self.pool.install(|| {
            tutorials
                .par_iter()
                .map(|t| info_span!("tutorial", trace_id = %t.id.key()).in_scope(|| self.process_one(t)))
                .collect()
        });

        let mut processed = Vec::new();
        let mut drops = Vec::new();
        let mut alignment: BTreeMap<String, u64> = BTreeMap::new();
        for (t, o) in tutorials.iter().zip(&outcomes) {
            match &o.result {
                Ok((p, policy)) => {
                    let name = serde_json::to_value(policy).expect("policy").as_str().unwrap_or_default().to_string();
                    *alignment.entry(name).or_default() += 1;
                    processed.push(p.clone());
                }
                Err((reason, detail)) => drops.push(DropRecord::new("process", t.id.key(), *reason, detail.clone())),
            }
        }
        write_jsonl(&out.join(PROCESSED_FILE), &processed)?;
        write_jsonl(&out.join(DROPS_FILE), &drops)?;
        let report = ProcessStageReport {
            input: tutorials.len() as u64,
            after_content_filter: outcomes.iter().filter(|o| o.content_passed).count() as u64,
            processed: processed.len() as u64,
            transcript_missing: outcomes.iter().filter(|o| o.transcript_missing).count() as u64,
            alignment,
            dropped: tally(&drops),
        };
        write_json(&out.join(REPORT_FILE), &report)?;
        info!(stage = "process", processed = report.processed, dropped = drops.len(), "stage finished");
        Ok(report)
    }

    fn process_one(&self, raw: &RawTutorial) -> ProcessOutcome {
        let fail = |content_passed: bool, transcript_missing: bool, reason: DropReason, detail: String| {
            warn!(trace_id = %raw.id.key(), reason = reason.code(), %detail, "tutorial dropped");
            ProcessOutcome {
                content_passed,
                transcript_missing,
                result: Err((reason, detail)),
            }
        };
        if let Err(e) = raw.validate() {
            return fail(false, false, DropReason::InvalidTutorial, e.to_string());
        }
        let text = assemble_text(raw, self.services.asr.as_ref(), &self.store);
        let missing = text.transcript_missing;
        if let Verdict::Drop { reason, detail } = content_filter(&text.text, &raw.textual.title, &self.services.llm) {
            return fail(false, missing, reason, detail);
        }
        let platform = match classify_platform(&text.text, &self.services.llm) {
            Ok(PlatformClass::Other) => return fail(true, missing, DropReason::PlatformOther, "classified as other".into()),
            Ok(p) => p,
            Err(e) => return fail(true, missing, DropReason::InvalidTutorial, e.to_string()),
        };
        let extraction = match extract_task_and_steps(&text.text, platform, &self.services.llm, self.cfg.process.max_steps) {
            Ok(x) => x,
            Err(d) => return fail(true, missing, d.reason, d.detail),
        };
        let observations = match self.observations(raw, text.transcript.as_ref().map(SegmentSpec::from_transcript)) {
            Ok(o) if o.is_empty() => return fail(true, missing, DropReason::NoObservations, "no usable screenshots".into()),
            Ok(o) => o,
            Err(e) => return fail(true, missing, DropReason::VisualError, e),
        };
        let alignment = match align_steps(&extraction, &observations) {
            Ok(a) => a,
            Err(e) => return fail(true, missing, DropReason::EmptyAfterAlignment, e.to_string()),
        };
        let tutorial = ProcessedTutorial {
            id: raw.id.clone(),
            task: extraction.task,
            platform: platform.platform().expect("mobile or desktop"),
            steps: alignment.pairs,
        };
        if let Err(e) = tutorial.validate() {
            return fail(true, missing, DropReason::InvalidTutorial, e.to_string());
        }
        ProcessOutcome {
            content_passed: true,
            transcript_missing: missing,
            result: Ok((tutorial, alignment.policy)),
        }
    }

    fn observations(&self, raw: &RawTutorial, segments: Option<SegmentSpec>) -> Result<Vec<ImageRef>, String> {
        match &raw.visual {
            VisualBundle::Article { images } => {
                let mut keep = Vec::new();
                for img in images {
                    let bytes = self.store.read(img.as_str()).map_err(|e| format!("{}: {e}", img.as_str()))?;
                    match classify_screenshot(&bytes, &self.services.vlm) {
                        Ok(true) => keep.push(img.clone()),
                        Ok(false) => {}
                        Err(e) => warn!(trace_id = %raw.id.key(), image = img.as_str(), error = %e.0, "image skipped"),
                    }
                }
                Ok(keep)
            }
            VisualBundle::Video { source, fps, .. } => {
                let frames: Box<dyn Iterator<Item = Result<Frame, FrameError>>> = match source {
                    VideoSource::RawStream { media } => {
                        Box::new(RawFrameReader::open(&self.store.path_of(media.as_str())).map_err(|e| e.to_string())?)
                    }
                    VideoSource::FrameDir { path } => {
                        Box::new(FrameDirReader::open(Path::new(path)).map_err(|e| e.to_string())?)
                    }
                };
                let segments = segments.filter(|s| !s.is_empty());
                let keyframes = extract_keyframes(frames, *fps, segments.as_ref(), &self.cfg.process.keyframes)
                    .map_err(|e| e.to_string())?;
                store_keyframes(&keyframes, &self.store).map_err(|e| e.to_string())
            }
        }
    }

    pub fn generate(&self) -> Result<GenerateStageReport, PipelineError> {
        let input = self.input(StageName::Generate, StageName::Process, PROCESSED_FILE)?;
        let tutorials: Vec<ProcessedTutorial> = read_jsonl(&input)?;
        let out = self.output(StageName::Generate)?;

        let results: Vec<Result<(GenerationRecord, Vec<Trajectory>), String>> = self.pool.install(|| {
            tutorials
                .par_iter()
                .map(|t| {
                    info_span!("tutorial", trace_id = %t.id.key()).in_scope(|| {
                        let outcomes = generate_trajectory(t, &self.services.agent, &self.store, self.cfg.generate)
                            .map_err(|e| e.to_string())?;
                        let trajs = split_trajectory(t, &outcomes).map_err(|e| e.to_string())?;
                        let record = GenerationRecord {
                            tutorial: t.id.key(),
                            splits: split_ranges(&outcomes),
                            trajectories: trajs.iter().map(|x| x.id.clone()).collect(),
                            outcomes,
                        };
                        Ok((record, trajs))
                    })
                })
                .collect()
        });

        let mut records = Vec::new();
        let mut candidates = Vec::new();
        let mut drops = Vec::new();
        let mut steps: BTreeMap<String, u64> = BTreeMap::new();
        for (t, r) in tutorials.iter().zip(results) {
            match r {
                Err(e) => drops.push(DropRecord::new("generate", t.id.key(), DropReason::NoTrajectory, e)),
                Ok((record, trajs)) => {
                    for o in &record.outcomes {
                        let kind = match o.result {
                            StepResult::Ok { .. } => "ok",
                            StepResult::ParseFailure { .. } => "parse_failure",
                            StepResult::NonGui { .. } => "non_gui",
                            StepResult::ServiceFailure { .. } => "service_failure",
                        };
                        *steps.entry(kind.to_string()).or_default() += 1;
                    }
                    if trajs.is_empty() {
                        drops.push(DropRecord::new(
                            "generate",
                            t.id.key(),
                            DropReason::NoTrajectory,
                            "no step produced a usable action",
                        ));
                    }
                    candidates.extend(trajs);
                    records.push(record);
                }
            }
        }
        write_jsonl(&out.join(CANDIDATES_FILE), &candidates)?;
        write_jsonl(&out.join(GENERATION_FILE), &records)?;
        write_jsonl(&out.join(DROPS_FILE), &drops)?;
        let report = GenerateStageReport {
            tutorials: tutorials.len() as u64,
            with_trajectories: records.iter().filter(|r| !r.trajectories.is_empty()).count() as u64,
            trajectories: candidates.len() as u64,
            steps,
            dropped: tally(&drops),
        };
        write_json(&out.join(REPORT_FILE), &report)?;
        info!(stage = "generate", trajectories = report.trajectories, "stage finished");
        Ok(report)
    }

    pub fn filter(&self) -> Result<(FilterStageReport, RetentionReport), PipelineError> {
        let input = self.input(StageName::Filter, StageName::Generate, CANDIDATES_FILE)?;
        let crawl_report: CrawlStageReport = read_json(&self.input(StageName::Filter, StageName::Crawl, REPORT_FILE)?)?;
        let process_report: ProcessStageReport =
            read_json(&self.input(StageName::Filter, StageName::Process, REPORT_FILE)?)?;
        let candidates: Vec<Trajectory> = read_jsonl(&input)?;
        let out = self.output(StageName::Filter)?;

        let verdicts: Vec<Verdict> = self.pool.install(|| {
            candidates
                .par_iter()
                .map(|t| {
                    info_span!("trajectory", trace_id = %t.id).in_scope(|| {
                        trajectory_quality_filter(t, &self.services.judge, &self.store, self.cfg.filter)
                    })
                })
                .collect()
        });

        let mut records = Vec::new();
        let mut drops = Vec::new();
        let mut kept = Vec::new();
        for (t, v) in candidates.iter().zip(&verdicts) {
            records.push(VerdictRecord {
                trajectory: t.id.clone(),
                tutorial: t.provenance.key(),
                verdict: v.clone(),
            });
            match v {
                Verdict::Keep => kept.push(t.clone()),
                Verdict::Drop { reason, detail } => drops.push(DropRecord::new("filter", t.id.clone(), *reason, detail.clone())),
            }
        }
        let tutorials_kept = kept.iter().map(|t| t.provenance.key()).collect::<BTreeSet<_>>().len() as u64;

        let mut counters = PipelineCounters::default()
            .update(Stage::Crawled, crawl_report.crawled)?
            .update(Stage::AfterDedup, crawl_report.after_dedup)?
            .update(Stage::AfterContentFilter, process_report.after_content_filter)?
            .update(Stage::AfterTrajectoryFilter, tutorials_kept)?;
        let hist = kept
            .iter()
            .map(trajectory_counters)
            .fold(PipelineCounters::default(), |a, b| a.merge(&b));
        counters.steps = hist.steps;
        counters.action_kinds = hist.action_kinds;
        counters.platforms = hist.platforms;
        counters.check_monotone()?;

        let meta = DatasetMeta {
            version: self.cfg.run.version.clone(),
            created_at: self.cfg.run.created_at.clone(),
        };
        let manifest = write_dataset(kept.iter().cloned(), &out.join(DATASET_DIR), &self.store, &meta)?;
        write_jsonl(&out.join(VERDICTS_FILE), &records)?;
        write_jsonl(&out.join(DROPS_FILE), &drops)?;
        let retention = RetentionReport::new(&counters, TrajectoryAccounting::from_verdicts(&verdicts));
        write_json(&out.join(COUNTERS_FILE), &counters)?;
        write_json(&out.join(RETENTION_FILE), &retention)?;
        let report = FilterStageReport {
            candidates: candidates.len() as u64,
            kept: kept.len() as u64,
            tutorials_kept,
            dropped: tally(&drops),
            dataset: manifest,
        };
        write_json(&out.join(REPORT_FILE), &report)?;
        info!(
            stage = "filter",
            kept = report.kept,
            retention = retention.retention_percent.as_deref().unwrap_or("n/a"),
            "stage finished"
        );
        Ok((report, retention))
    }

    fn dataset_input(&self, stage: StageName, dataset: Option<&Path>) -> Result<PathBuf, PipelineError> {
        let dir = dataset.map(Path::to_path_buf).unwrap_or_else(|| self.work.dataset());
        require_input(stage.command(), &dir.join(crate::dataset::TRAJECTORIES_FILE))?;
        Ok(dir)
    }

    /// One SFT sample per step, with referenced images copied alongside.
    pub fn export_sft(&self, dataset: Option<&Path>) -> Result<SftStageReport, PipelineError> {
        let dir = self.dataset_input(StageName::ExportSft, dataset)?;
        let trajs: Vec<Trajectory> = read_dataset(&dir)?.collect::<Result<_, _>>()?;
        let out = self.output(StageName::ExportSft)?;
        let n = self.cfg.export.history;
        let samples = write_sft(export_sft(trajs.iter().cloned().map(Ok), n), &out.join(SFT_FILE))?;

        let src_dir = dir.join(IMAGES_DIR);
        let src = BlobStore::open(&src_dir).map_err(PipelineError::io(&src_dir))?;
        let dst_dir = out.join(IMAGES_DIR);
        let dst = BlobStore::open(&dst_dir).map_err(PipelineError::io(&dst_dir))?;
        let images: BTreeSet<&str> = trajs.iter().flat_map(|t| t.steps.iter().map(|s| s.observation.as_str())).collect();
        for name in &images {
            src.copy_to(name, &dst).map_err(PipelineError::io(&src.path_of(name)))?;
        }
        let report = SftStageReport {
            trajectories: trajs.len() as u64,
            samples,
            history: n,
            images: images.len() as u64,
        };
        write_json(&out.join(REPORT_FILE), &report)?;
        info!(stage = "export-sft", samples, "stage finished");
        Ok(report)
    }

    pub fn stats(&self, dataset: Option<&Path>) -> Result<crate::dataset::StatsReport, PipelineError> {
        let dir = self.dataset_input(StageName::Stats, dataset)?;
        let trajs: Vec<Trajectory> = read_dataset(&dir)?.collect::<Result<_, _>>()?;
        let out = self.output(StageName::Stats)?;
        let report = self.pool.install(|| compute_stats(&trajs));
        write_json(&out.join(STATS_FILE), &report)?;
        info!(stage = "stats", trajectories = report.trajectories, "stage finished");
        Ok(report)
    }

    pub fn eval(&self, records: Option<&Path>) -> Result<crate::eval::EvalReport, PipelineError> {
        let path = records
            .map(Path::to_path_buf)
            .or_else(|| self.cfg.eval.records.clone())
            .ok_or_else(|| ConfigError::invalid("eval.records", "no evaluation records given"))?;
        require_input(StageName::Eval.command(), &path)?;
        let recs: Vec<EvalRecord> = read_jsonl(&path)?;
        let out = self.output(StageName::Eval)?;
        let report = aggregate(&recs);
        write_json(&out.join(REPORT_FILE), &report)?;
        info!(stage = "eval", count = report.count, "stage finished");
        Ok(report)
    }

    /// Every stage in order; evaluation only when records are configured.
    pub fn run_all(&self) -> Result<RetentionReport, PipelineError> {
        self.crawl()?;
        self.process()?;
        self.generate()?;
        let (_, retention) = self.filter()?;
        self.export_sft(None)?;
        self.stats(None)?;
        if self.cfg.eval.records.is_some() {
            self.eval(None)?;
        }
        Ok(retention)
    }
}
