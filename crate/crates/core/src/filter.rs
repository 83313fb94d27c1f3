//! Trajectory-quality filtering with a VLM judge, and funnel accounting.

use std::collections::BTreeMap;
use std::io::Cursor;

use image::imageops::FilterType;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tracing::warn;

use crate::grammar::serialize_thought_action;
use crate::services::prompts;
use crate::services::wire::extract_json_object;
use crate::services::{ChatRequest, ServiceClient, UserTurn};
use crate::store::BlobStore;
use crate::types::{format_percent, DropReason, PipelineCounters, Stage, Trajectory, Verdict};

pub const MAX_JUDGE_IMAGES: usize = 4;
/// Long side of images sent to the judge.
pub const JUDGE_IMAGE_LONG_SIDE: u32 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Leading observations shown to the judge, 1..=4.
    pub judge_images: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { judge_images: 1 }
    }
}

fn downscale_png(bytes: &[u8]) -> Option<Vec<u8>> {
    let img = image::load_from_memory(bytes).ok()?;
    if img.width().max(img.height()) <= JUDGE_IMAGE_LONG_SIDE {
        return Some(bytes.to_vec());
    }
    let small = img.resize(JUDGE_IMAGE_LONG_SIDE, JUDGE_IMAGE_LONG_SIDE, FilterType::Triangle);
    let mut out = Cursor::new(Vec::new());
    small.write_to(&mut out, image::ImageFormat::Png).ok()?;
    Some(out.into_inner())
}

pub fn render_steps(traj: &Trajectory) -> String {
    traj.steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            format!(
                "Step {} ({}):\n{}",
                i + 1,
                s.source_rough_description,
                serialize_thought_action(&s.thought_action)
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Strict verdict schema: `verdict` keep/drop and a matching `reason_code`.
pub fn parse_judge_verdict(reply: &str) -> Result<Verdict, String> {
    let v = extract_json_object(reply).ok_or("no JSON object")?;
    let obj = v.as_object().expect("object");
    if obj.len() != 2 {
        return Err(format!("expected exactly verdict and reason_code, got {} fields", obj.len()));
    }
    let verdict = obj.get("verdict").and_then(Value::as_str).ok_or("missing verdict")?;
    let code = obj.get("reason_code").and_then(Value::as_str).ok_or("missing reason_code")?;
    match (verdict, code) {
        ("keep", "none") => Ok(Verdict::Keep),
        ("drop", c) => DropReason::from_judge_code(c)
            .map(|r| Verdict::drop(r, ""))
            .ok_or_else(|| format!("unknown reason_code `{c}`")),
        (v, c) => Err(format!("inconsistent verdict `{v}` with reason_code `{c}`")),
    }
}

/// Deterministic checks first, then the judge. Every failure path drops.
pub fn trajectory_quality_filter(traj: &Trajectory, judge: &ServiceClient, store: &BlobStore, cfg: FilterConfig) -> Verdict {
    if let Err(e) = traj.validate() {
        return Verdict::drop(DropReason::InvalidTrajectory, e.to_string());
    }
    for (i, s) in traj.steps.iter().enumerate() {
        if let Some(a) = s.thought_action.actions.iter().find(|a| !a.kind.allowed_on(traj.platform)) {
            return Verdict::drop(
                DropReason::PlatformMismatch,
                format!("step {}: {} is not a {} action", i + 1, a.kind, traj.platform.as_str()),
            );
        }
    }

    let n_images = cfg.judge_images.clamp(1, MAX_JUDGE_IMAGES);
    let mut turn = UserTurn::default();
    for s in traj.steps.iter().take(n_images) {
        let Some(png) = store.read_image(&s.observation).ok().and_then(|b| downscale_png(&b)) else {
            return Verdict::drop(DropReason::InvalidTrajectory, format!("observation {} unreadable", s.observation.0));
        };
        turn = turn.with_png(png);
    }
    let t = prompts::trajectory_judge();
    let steps = render_steps(traj);
    let vars = [
        ("task", traj.task.as_str()),
        ("platform", traj.platform.as_str()),
        ("steps", steps.as_str()),
    ];
    let first = ChatRequest::new(t.system(&vars)).turn(turn.with_text(t.user(&vars)));

    let ask = |req: &ChatRequest| judge.chat(req).map(|r| r.text);
    let reply = match ask(&first) {
        Ok(r) => r,
        Err(e) => return Verdict::drop(DropReason::JudgeUnavailable, e.to_string()),
    };
    let problem = match parse_judge_verdict(&reply) {
        Ok(v) => return v,
        Err(p) => p,
    };
    warn!(trace_id = %traj.id, %problem, "judge verdict rejected; re-prompting once");
    let retry = first.turn(UserTurn::text(format!(
        "Your previous reply was rejected: {problem}. Reply again with only the JSON object."
    )));
    match ask(&retry) {
        Err(e) => Verdict::drop(DropReason::JudgeUnavailable, e.to_string()),
        Ok(r) => parse_judge_verdict(&r).unwrap_or_else(|p| Verdict::drop(DropReason::MalformedVerdict, p)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRow {
    pub stage: Stage,
    pub count: u64,
    /// Share of the crawled count, when anything was crawled.
    pub fraction: Option<f64>,
    pub percent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryAccounting {
    pub input: u64,
    pub kept: u64,
    pub dropped: BTreeMap<DropReason, u64>,
}

impl TrajectoryAccounting {
    pub fn from_verdicts<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> Self {
        let mut acc = TrajectoryAccounting {
            input: 0,
            kept: 0,
            dropped: BTreeMap::new(),
        };
        for v in verdicts {
            acc.input += 1;
            match v {
                Verdict::Keep => acc.kept += 1,
                Verdict::Drop { reason, .. } => *acc.dropped.entry(*reason).or_default() += 1,
            }
        }
        acc
    }

    /// Every input is either kept or dropped with some reason.
    pub fn is_conserved(&self) -> bool {
        self.kept + self.dropped.values().sum::<u64>() == self.input
    }
}

/// The stage funnel: tutorial counts per stage and their share of the crawl.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionReport {
    pub funnel: Vec<StageRow>,
    pub retention: Option<f64>,
    pub retention_percent: Option<String>,
    pub trajectories: TrajectoryAccounting,
}

impl RetentionReport {
    pub fn new(counters: &PipelineCounters, trajectories: TrajectoryAccounting) -> Self {
        let crawled = counters.crawled;
        let funnel = Stage::ORDER
            .iter()
            .map(|&stage| {
                let count = counters.get(stage);
                let fraction = (crawled > 0).then(|| count as f64 / crawled as f64);
                StageRow {
                    stage,
                    count,
                    fraction,
                    percent: fraction.map(format_percent),
                }
            })
            .collect();
        let retention = counters.retention();
        Self {
            funnel,
            retention,
            retention_percent: retention.map(format_percent),
            trajectories,
        }
    }
}
