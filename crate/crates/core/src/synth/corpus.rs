//! Synthetic tutorial corpora with a matching [`ScriptBook`].
//!
//! A [`CorpusPlan`] describes every tutorial and how each scripted service
//! treats it (content verdict, platform label, extraction, per-step agent
//! replies, judge verdicts). [`write_corpus`] materializes the fixture
//! manifest, images, videos and audio on disk and returns the rules.

use std::fs;
use std::io::{self, Cursor};
use std::path::Path;

use image::{ImageFormat, Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::script::{ScriptBook, ScriptReply, ScriptedCall};
use super::video::{synthetic_frames, synthetic_raw_stream, VideoSpec};
use crate::crawl::{FixtureEntry, FixtureManifest, FixtureVideo, TaskSeed};
use crate::grammar::serialize_actions;
use crate::store::sha256_hex;
use crate::types::{Action, ActionKind, DropReason, Platform, Point, Position, SourceKind, Transcript, TranscriptSegment};
use crate::vision::frame::write_frame_dir;
use crate::vision::normalize_to_png;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const SCRIPT_NAME: &str = "script.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImagePlan {
    Screenshot,
    JpegScreenshot,
    Photo,
    Corrupt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranscriptPlan {
    Captions,
    Asr,
    AsrFails,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VisualPlan {
    Article { images: Vec<ImagePlan> },
    /// One hard cut per step.
    Video { transcript: TranscriptPlan, frame_dir: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentPlan {
    Act(Vec<Action>),
    /// Text without an action section.
    Malformed,
    Wait,
    /// A click outside the unit square.
    OutOfRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepPlan {
    pub instruction: String,
    pub agent: AgentPlan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionPlan {
    Ok,
    MalformedTwice,
    RecoversOnRetry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TutorialPlan {
    pub source: SourceKind,
    pub id: String,
    /// Another spelling of the same id, listed under `alt_keywords`.
    pub alt_id: Option<String>,
    pub alt_keywords: Vec<String>,
    pub title: String,
    pub task: String,
    pub platform: Platform,
    /// Platform label the classifier returns instead of the true one.
    pub platform_label: Option<String>,
    pub gui: bool,
    pub extraction: ExtractionPlan,
    pub visual: VisualPlan,
    pub steps: Vec<StepPlan>,
    pub keywords: Vec<String>,
    pub tags: Vec<String>,
    /// Judge drops keyed by the tutorial step a trajectory starts at.
    pub judge_drops: Vec<(usize, DropReason)>,
    /// No judge rule at all: the judge answers 404.
    pub judge_down: bool,
    pub fail_download: bool,
}

impl TutorialPlan {
    pub fn article(source: SourceKind, id: &str, title: &str, task: &str, platform: Platform) -> Self {
        Self {
            source,
            id: id.into(),
            alt_id: None,
            alt_keywords: Vec::new(),
            title: title.into(),
            task: task.into(),
            platform,
            platform_label: None,
            gui: true,
            extraction: ExtractionPlan::Ok,
            visual: VisualPlan::Article { images: Vec::new() },
            steps: Vec::new(),
            keywords: Vec::new(),
            tags: Vec::new(),
            judge_drops: Vec::new(),
            judge_down: false,
            fail_download: false,
        }
    }

    pub fn video(source: SourceKind, id: &str, title: &str, task: &str, platform: Platform, transcript: TranscriptPlan) -> Self {
        Self {
            visual: VisualPlan::Video {
                transcript,
                frame_dir: false,
            },
            ..Self::article(source, id, title, task, platform)
        }
    }

    pub fn images(mut self, images: &[ImagePlan]) -> Self {
        self.visual = VisualPlan::Article { images: images.to_vec() };
        self
    }

    pub fn step(mut self, instruction: &str, agent: AgentPlan) -> Self {
        self.steps.push(StepPlan {
            instruction: instruction.into(),
            agent,
        });
        self
    }

    pub fn keywords(mut self, ks: &[&str]) -> Self {
        self.keywords = ks.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn tags(mut self, ts: &[&str]) -> Self {
        self.tags = ts.iter().map(|s| s.to_string()).collect();
        self
    }

    fn slug(&self) -> String {
        sha256_hex(format!("{}:{}", self.source, self.id).as_bytes())[..12].to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusPlan {
    pub seeds: Vec<TaskSeed>,
    /// What the keyword-expansion service proposes for the seeds.
    pub expansions: Vec<String>,
    /// Size of the expanded keyword list requested from the service.
    pub keyword_target: usize,
    /// Keywords searched in addition to the expanded ones.
    pub keywords: Vec<String>,
    pub tags: Vec<String>,
    pub tutorials: Vec<TutorialPlan>,
}

pub fn click(x: f64, y: f64) -> Action {
    Action::at(ActionKind::Click, x, y)
}

pub fn tap(x: f64, y: f64) -> Action {
    Action::at(ActionKind::Tap, x, y)
}

pub fn input(text: &str, x: f64, y: f64) -> Action {
    Action::new(ActionKind::Input, Some(text.into()), Some(Position::Point(Point::new(x, y))))
}

pub fn hot_key(keys: &str) -> Action {
    Action::new(ActionKind::HotKey, Some(keys.into()), None)
}

pub fn scroll(direction: &str, x: f64, y: f64) -> Action {
    Action::new(ActionKind::Scroll, Some(direction.into()), Some(Position::Point(Point::new(x, y))))
}

pub fn long_press(seconds: &str, x: f64, y: f64) -> Action {
    Action::new(ActionKind::LongPress, Some(seconds.into()), Some(Position::Point(Point::new(x, y))))
}

fn pair(kind: ActionKind, a: (f64, f64), b: (f64, f64)) -> Action {
    Action::new(
        kind,
        None,
        Some(Position::PointPair(Point::new(a.0, a.1), Point::new(b.0, b.1))),
    )
}

pub fn drag(a: (f64, f64), b: (f64, f64)) -> Action {
    pair(ActionKind::Drag, a, b)
}

pub fn swipe(a: (f64, f64), b: (f64, f64)) -> Action {
    pair(ActionKind::Swipe, a, b)
}

pub fn act(actions: Vec<Action>) -> AgentPlan {
    AgentPlan::Act(actions)
}

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

pub fn agent_reply(step: &StepPlan) -> String {
    let thought = format!("To continue I should {}.", lower_first(step.instruction.trim_end_matches('.')));
    match &step.agent {
        AgentPlan::Act(actions) => format!("Thought: {thought}\nAction: {}", serialize_actions(actions)),
        AgentPlan::Malformed => format!("I think the next move is to {}.", lower_first(&step.instruction)),
        AgentPlan::Wait => {
            "Thought: The screen has not loaded yet.\nAction: {\"action\": \"WAIT\", \"value\": \"None\", \"position\": \"None\"}"
                .to_string()
        }
        AgentPlan::OutOfRange => format!(
            "Thought: {thought}\nAction: {{\"action\": \"CLICK\", \"value\": \"None\", \"position\": [1.4, 0.2]}}"
        ),
    }
}

fn encode(img: &RgbImage, fmt: ImageFormat) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, fmt).expect("in-memory encode");
    out.into_inner()
}

/// A window-like layout: title bar, toolbar buttons and content lines.
pub fn screenshot_image(seed: u64, w: u32, h: u32) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bg = [rng.random_range(225..=250u8); 3];
    let mut img = RgbImage::from_pixel(w, h, Rgb(bg));
    let bar = Rgb([rng.random_range(20..90), rng.random_range(60..140), rng.random_range(120..220)]);
    let fill = |img: &mut RgbImage, x0: u32, y0: u32, x1: u32, y1: u32, c: Rgb<u8>| {
        for y in y0..y1.min(h) {
            for x in x0..x1.min(w) {
                img.put_pixel(x, y, c);
            }
        }
    };
    fill(&mut img, 0, 0, w, h / 10 + 1, bar);
    let mut x = 4;
    while x + 14 < w {
        let bw = rng.random_range(8..18);
        fill(&mut img, x, h / 10 + 3, x + bw, h / 10 + 9, Rgb([180, 180, 190]));
        x += bw + rng.random_range(3..8);
    }
    let mut y = h / 4;
    while y + 4 < h {
        let len = rng.random_range(w / 4..w - 8);
        fill(&mut img, 8, y, 8 + len, y + 2, Rgb([60, 60, 60]));
        y += rng.random_range(6..12);
    }
    img
}

/// Smooth colour field with grain, standing in for a photograph.
pub fn photo_image(seed: u64, w: u32, h: u32) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b): ([f64; 3], [f64; 3]) = (
        [rng.random(), rng.random(), rng.random()],
        [rng.random(), rng.random(), rng.random()],
    );
    RgbImage::from_fn(w, h, |x, y| {
        let t = (x as f64 / w as f64 + y as f64 / h as f64) / 2.0;
        let mut px = [0u8; 3];
        for c in 0..3 {
            let v = 255.0 * (a[c] * (1.0 - t) + b[c] * t) + rng.random_range(-12.0..12.0);
            px[c] = v.clamp(0.0, 255.0) as u8;
        }
        Rgb(px)
    })
}

const IMAGE_W: u32 = 160;
const IMAGE_H: u32 = 100;
const VIDEO_W: u32 = 64;
const VIDEO_H: u32 = 48;
const FIRST_CUT: u64 = 18;
const CUT_SPACING: u64 = 20;
const TAIL_FRAMES: u64 = 12;

pub fn video_spec(seed: u64, steps: usize) -> VideoSpec {
    let cuts: Vec<u64> = (0..steps as u64).map(|j| FIRST_CUT + CUT_SPACING * j).collect();
    let frames = FIRST_CUT + CUT_SPACING * (steps as u64).saturating_sub(1) + TAIL_FRAMES;
    VideoSpec::new(VIDEO_W, VIDEO_H, frames, cuts, seed)
}

/// One transcript segment per step, each covering its cut and settle time.
pub fn step_transcript(spec: &VideoSpec, steps: &[StepPlan]) -> Transcript {
    let fps = spec.fps as f64;
    let segs = spec
        .cuts
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let start = (c.saturating_sub(2)) as f64 / fps;
            let end = spec.cuts.get(j + 1).map_or(spec.frames as f64 / fps, |&n| (n - 2) as f64 / fps);
            let text = match j {
                0 => format!("First, {}.", lower_first(&steps[j].instruction)),
                _ => format!("Next, {}.", lower_first(&steps[j].instruction)),
            };
            TranscriptSegment {
                start_s: start,
                end_s: end,
                text,
            }
        })
        .collect();
    Transcript::new(segs).expect("synthetic transcript is well formed")
}

fn write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(p) = path.parent() {
        fs::create_dir_all(p)?;
    }
    fs::write(path, bytes)
}

fn extraction_json(t: &TutorialPlan) -> String {
    json!({
        "task": t.task,
        "steps": t.steps.iter().map(|s| s.instruction.as_str()).collect::<Vec<_>>(),
        "key_phrases": ["clicking a button", "selecting a menu"],
    })
    .to_string()
}

/// Write the corpus under `dir` and return the service rules for it.
pub fn write_corpus(plan: &CorpusPlan, dir: &Path) -> io::Result<ScriptBook> {
    fs::create_dir_all(dir)?;
    let mut book = ScriptBook::default();
    let mut entries = Vec::new();

    if let Some(first) = plan.seeds.first() {
        let needle = format!("- {}\n", first.render());
        book.text(
            ScriptedCall::KeywordExpansion,
            &[&needle],
            json!({ "keywords": plan.expansions }).to_string(),
        );
    }

    for (n, t) in plan.tutorials.iter().enumerate() {
        let slug = t.slug();
        let seed = n as u64 * 7919 + 17;
        let text_needle = format!("Tutorial text:\n{}\n", t.title);

        let body = match &t.visual {
            VisualPlan::Article { .. } => format!("This guide explains how to {}.", lower_first(&t.task)),
            VisualPlan::Video { .. } => format!("A short screen recording that shows how to {}.", lower_first(&t.task)),
        };
        let mut entry = FixtureEntry {
            source: t.source,
            id: t.id.clone(),
            keywords: t.keywords.clone(),
            tags: t.tags.clone(),
            title: t.title.clone(),
            body,
            step_texts: Vec::new(),
            transcript: None,
            images: Vec::new(),
            video: None,
            audio: None,
            fail_download: t.fail_download,
        };

        match &t.visual {
            VisualPlan::Article { images } => {
                entry.step_texts = t
                    .steps
                    .iter()
                    .enumerate()
                    .map(|(i, s)| format!("Step {}: {}.", i + 1, s.instruction.trim_end_matches('.')))
                    .collect();
                for (i, kind) in images.iter().enumerate() {
                    let iseed = seed * 31 + i as u64;
                    let (rel, bytes, screenshot) = match kind {
                        ImagePlan::Screenshot => (
                            format!("images/{slug}-{i}.png"),
                            encode(&screenshot_image(iseed, IMAGE_W, IMAGE_H), ImageFormat::Png),
                            Some(true),
                        ),
                        ImagePlan::JpegScreenshot => (
                            format!("images/{slug}-{i}.jpg"),
                            encode(&screenshot_image(iseed, IMAGE_W, IMAGE_H), ImageFormat::Jpeg),
                            Some(true),
                        ),
                        ImagePlan::Photo => (
                            format!("images/{slug}-{i}.png"),
                            encode(&photo_image(iseed, IMAGE_W, IMAGE_H), ImageFormat::Png),
                            Some(false),
                        ),
                        ImagePlan::Corrupt => (format!("images/{slug}-{i}.png"), b"not an image".to_vec(), None),
                    };
                    write(&dir.join(&rel), &bytes)?;
                    if let Some(verdict) = screenshot {
                        let png = normalize_to_png(&bytes).map_err(|e| io::Error::other(e.0))?;
                        let needle = format!("sha256:{}", sha256_hex(&png));
                        book.text(ScriptedCall::Screenshot, &[&needle], json!({ "screenshot": verdict }).to_string());
                    }
                    entry.images.push(rel);
                }
            }
            VisualPlan::Video { transcript, frame_dir } => {
                let spec = video_spec(seed, t.steps.len());
                let captions = step_transcript(&spec, &t.steps);
                if *frame_dir {
                    let rel = format!("videos/{slug}");
                    write_frame_dir(&dir.join(&rel), spec.fps as f64, &synthetic_frames(&spec))
                        .map_err(|e| io::Error::other(e.to_string()))?;
                    entry.video = Some(FixtureVideo::FrameDir(rel));
                } else {
                    let rel = format!("videos/{slug}.rawf");
                    write(&dir.join(&rel), &synthetic_raw_stream(&spec))?;
                    entry.video = Some(FixtureVideo::RawStream(rel));
                }
                match transcript {
                    TranscriptPlan::Captions => entry.transcript = Some(captions),
                    TranscriptPlan::Asr | TranscriptPlan::AsrFails => {
                        let rel = format!("audio/{slug}.wav");
                        let audio = format!("RIFF synthetic narration {slug}").into_bytes();
                        write(&dir.join(&rel), &audio)?;
                        if *transcript == TranscriptPlan::Asr {
                            let needle = format!("sha256:{}", sha256_hex(&audio));
                            book.push(ScriptedCall::Transcribe, &[&needle], ScriptReply::Transcript(captions));
                        }
                        entry.audio = Some(rel);
                    }
                }
            }
        }

        let title_needle = format!("Title: {}\n", t.title);
        let verdict = if t.gui {
            json!({"verdict": "yes", "reason": "teaches a GUI task"})
        } else {
            json!({"verdict": "no", "reason": "not about operating software"})
        };
        book.text(ScriptedCall::ContentFilter, &[&title_needle], verdict.to_string());

        let label = t.platform_label.clone().unwrap_or_else(|| t.platform.as_str().to_string());
        book.text(ScriptedCall::ClassifyPlatform, &[&text_needle], json!({ "platform": label }).to_string());

        match t.extraction {
            ExtractionPlan::Ok => book.text(ScriptedCall::ExtractTask, &[&text_needle], extraction_json(t)),
            ExtractionPlan::MalformedTwice => {
                book.text(ScriptedCall::ExtractTask, &[&text_needle], "Here are the steps: open it, then change it.")
            }
            ExtractionPlan::RecoversOnRetry => {
                book.text(
                    ScriptedCall::ExtractTask,
                    &[&text_needle, "Your previous reply was rejected"],
                    extraction_json(t),
                );
                book.text(
                    ScriptedCall::ExtractTask,
                    &[&text_needle],
                    json!({"task": t.task, "steps": "open the menu"}).to_string(),
                );
            }
        }

        for s in &t.steps {
            let needle = format!("Task instruction: {}\n", s.instruction);
            book.text(ScriptedCall::Agent, &[&needle], agent_reply(s));
        }

        let task_needle = format!("Task: {}\nPlatform:", t.task);
        for (start, reason) in &t.judge_drops {
            let step = &t.steps[start - 1];
            let first = format!("Step 1 ({}):", step.instruction);
            book.text(
                ScriptedCall::TrajectoryJudge,
                &[&task_needle, &first],
                json!({"verdict": "drop", "reason_code": reason.code()}).to_string(),
            );
        }
        if !t.judge_down {
            book.text(
                ScriptedCall::TrajectoryJudge,
                &[&task_needle],
                json!({"verdict": "keep", "reason_code": "none"}).to_string(),
            );
        }

        if let Some(alt) = &t.alt_id {
            let mut dup = entry.clone();
            dup.id = alt.clone();
            dup.keywords = t.alt_keywords.clone();
            dup.tags = Vec::new();
            entries.push(entry);
            entries.push(dup);
        } else {
            entries.push(entry);
        }
    }

    let manifest = FixtureManifest { entries };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serialization");
    text.push('\n');
    write(&dir.join(MANIFEST_NAME), text.as_bytes())?;
    let mut script = serde_json::to_string_pretty(&book).expect("script serialization");
    script.push('\n');
    write(&dir.join(SCRIPT_NAME), script.as_bytes())?;
    Ok(book)
}

use AgentPlan::{Malformed, OutOfRange, Wait};
use ImagePlan::{Corrupt, JpegScreenshot, Photo, Screenshot};
use Platform::{Desktop, Mobile};
use SourceKind::{BaiduExperience, Bilibili, TikTok, WikiHow, YouTube};

const K_WORD: &str = "Word changing font size";
const K_EXCEL: &str = "Excel sorting a column";
const K_ANDROID: &str = "Android turning on dark mode";
const K_CHROME: &str = "Chrome clearing browsing history";
const K_PHOTOSHOP: &str = "Photoshop cropping an image";
const K_IPHONE: &str = "iPhone setting an alarm";
const K_GMAIL: &str = "Gmail creating a filter";
const K_WHATSAPP: &str = "WhatsApp muting a chat";
pub const BUNDLED_TAG: &str = "computers-and-electronics";

/// The 30-occurrence corpus shipped with the repository: 10 video and 20
/// article search hits over 27 distinct tutorials.
pub fn bundled_plan() -> CorpusPlan {
    let seeds = vec![
        TaskSeed::new("Word", "changing font size"),
        TaskSeed::new("Excel", "sorting a column"),
        TaskSeed::new("Android", "turning on dark mode"),
        TaskSeed::new("Chrome", "clearing browsing history"),
    ];
    let expansions = [K_PHOTOSHOP, K_IPHONE, K_GMAIL, K_WHATSAPP, "word CHANGING  font size"]
        .map(String::from)
        .to_vec();
    let tag = [BUNDLED_TAG];

    let mut v7 = TutorialPlan::video(YouTube, "https://www.youtube.com/watch?v=gmFilter007&t=3s", "Gmail filters tutorial", "Create a filter in Gmail for newsletters", Desktop, TranscriptPlan::Captions)
        .step("Click the search options arrow in Gmail", act(vec![click(0.62, 0.08)]))
        .step("Type newsletter in the From field", act(vec![input("newsletter", 0.45, 0.22)]))
        .step("Click Create filter", act(vec![click(0.71, 0.64)]))
        .keywords(&[K_GMAIL]);
    v7.visual = VisualPlan::Video {
        transcript: TranscriptPlan::Captions,
        frame_dir: true,
    };
    v7.judge_drops = vec![(1, DropReason::ObservationMismatch)];

    let mut v5 = TutorialPlan::video(YouTube, "pshopCrop05", "Photoshop crop tool in two minutes", "Crop an image with the Photoshop crop tool", Desktop, TranscriptPlan::Asr)
        .step("Select the Crop tool in the Photoshop toolbar", act(vec![click(0.03, 0.31)]))
        .step("Drag the crop handles around the subject", act(vec![drag((0.2, 0.2), (0.8, 0.7))]))
        .step("Press Enter to apply the crop", Wait)
        .keywords(&[K_PHOTOSHOP]);
    v5.judge_drops = vec![(1, DropReason::TruncatedTask)];

    let mut a3 = TutorialPlan::article(BaiduExperience, "https://jingyan.baidu.com/article/darkmode3.html", "Turn on dark mode on Android", "Turn on dark mode on an Android phone", Mobile)
        .images(&[Screenshot, Screenshot, Screenshot])
        .step("Open the Android Settings app", act(vec![tap(0.5, 0.83)]))
        .step("Tap Display and switch on Dark theme", act(vec![tap(0.5, 0.41), tap(0.86, 0.22)]))
        .keywords(&[K_ANDROID]);
    a3.alt_id = Some("https://jingyan.baidu.com/article/darkmode3.html?from=share&utm_source=feed".into());
    a3.alt_keywords = vec![K_WHATSAPP.into()];

    let mut a6 = TutorialPlan::article(WikiHow, "https://www.wikihow.com/Create-a-Filter-in-Gmail", "Create a filter in Gmail", "Create a Gmail filter that labels invoices", Desktop)
        .images(&[Screenshot, Screenshot])
        .step("Open Gmail settings", act(vec![click(0.95, 0.07)]))
        .step("Open the Filters tab", act(vec![click(0.4, 0.18)]))
        .keywords(&[K_GMAIL]);
    a6.extraction = ExtractionPlan::MalformedTwice;

    let mut a7 = TutorialPlan::article(WikiHow, "https://www.wikihow.com/Crop-an-Image-in-Photoshop", "Crop an image in Photoshop", "Crop a photo in Photoshop", Desktop)
        .images(&[Screenshot, Screenshot])
        .step("Choose the Crop tool from the Photoshop tools panel", act(vec![click(0.03, 0.33)]))
        .step("Press Enter to commit the crop", act(vec![hot_key("enter")]))
        .keywords(&[K_PHOTOSHOP]);
    a7.extraction = ExtractionPlan::RecoversOnRetry;

    let non_gui = |id: &str, title: &str, task: &str, kw: &str| {
        let mut t = TutorialPlan::article(WikiHow, id, title, task, Desktop)
            .images(&[Photo, Photo])
            .step(&format!("Start to {}", lower_first(task)), act(vec![click(0.5, 0.5)]))
            .keywords(&[kw]);
        t.gui = false;
        t
    };

    let mut a12 = TutorialPlan::article(WikiHow, "https://www.wikihow.com/Use-a-Universal-Remote", "Program a universal remote", "Program a universal TV remote", Desktop)
        .images(&[Photo])
        .step("Hold the setup button on the remote", act(vec![click(0.5, 0.5)]))
        .tags(&tag);
    a12.platform_label = Some("other".into());

    let mut a15 = TutorialPlan::article(WikiHow, "https://www.wikihow.com/Add-a-Signature-in-Outlook", "Add a signature in Outlook", "Add an email signature in Outlook", Desktop)
        .images(&[Screenshot, Screenshot])
        .step("Open Outlook options", act(vec![click(0.05, 0.12)]))
        .step("Open the Signatures editor", act(vec![scroll("down", 0.5, 0.5)]))
        .tags(&tag);
    a15.judge_drops = vec![(1, DropReason::IncoherentActions)];

    let mut a17 = TutorialPlan::article(WikiHow, "https://www.wikihow.com/Share-Your-Location-on-Google-Maps", "Share your location on Google Maps", "Share your live location in Google Maps", Mobile)
        .images(&[Screenshot, Screenshot, Screenshot])
        .step("Tap your profile picture in Google Maps", act(vec![tap(0.9, 0.07)]))
        .step("Choose Location sharing", Wait)
        .step("Tap Share and pick a contact", act(vec![tap(0.5, 0.9)]))
        .tags(&tag);
    a17.judge_drops = vec![(3, DropReason::NonGuiResidue)];

    let mut a18 = TutorialPlan::article(WikiHow, "https://www.wikihow.com/Enable-Two-Factor-Authentication-on-Instagram", "Enable two-factor authentication on Instagram", "Turn on two-factor authentication in Instagram", Mobile)
        .images(&[Screenshot, Screenshot])
        .step("Open Instagram settings from the menu", act(vec![tap(0.92, 0.06)]))
        .step("Tap Security then Two-factor authentication", act(vec![tap(0.5, 0.35)]))
        .tags(&tag);
    a18.judge_down = true;

    let mut broken = TutorialPlan::article(WikiHow, "https://www.wikihow.com/Freeze-Panes-in-Excel", "Freeze panes in Excel", "Freeze the top row in Excel", Desktop)
        .images(&[Screenshot])
        .step("Open the View tab in Excel", act(vec![click(0.4, 0.06)]))
        .keywords(&[K_EXCEL]);
    broken.fail_download = true;

    let v6 = TutorialPlan::video(YouTube, "https://youtu.be/iphAlarm006", "Set an alarm on iPhone", "Set a morning alarm on an iPhone", Mobile, TranscriptPlan::AsrFails)
        .step("Open the Clock app on the iPhone", act(vec![tap(0.25, 0.6)]))
        .step("Tap the plus button and save the alarm", act(vec![tap(0.92, 0.07), tap(0.9, 0.12)]))
        .keywords(&[K_IPHONE]);

    let tutorials = vec![
        TutorialPlan::video(YouTube, "https://www.youtube.com/watch?v=wordFont001&utm_source=x", "Change font size in Word (video)", "Change the font size of selected text in Word", Desktop, TranscriptPlan::Captions)
            .step("Select the text in the Word document", act(vec![drag((0.15, 0.3), (0.6, 0.34))]))
            .step("Click the font size box on the Home tab", act(vec![click(0.32, 0.11)]))
            .step("Type 14 and press Enter", act(vec![input("14", 0.32, 0.11), hot_key("enter")]))
            .keywords(&[K_WORD]),
        TutorialPlan::video(YouTube, "xlSort00002", "Sorting in Excel made easy", "Sort a column from A to Z in Excel", Desktop, TranscriptPlan::Captions)
            .step("Click the column header in Excel", act(vec![click(0.21, 0.18)]))
            .step("Open the Data tab in Excel", Malformed)
            .step("Click Sort A to Z", act(vec![click(0.44, 0.12)]))
            .keywords(&[K_EXCEL]),
        TutorialPlan::video(YouTube, "andDark0003", "Android dark mode walkthrough", "Enable dark mode in Android settings", Mobile, TranscriptPlan::Captions)
            .step("Swipe down from the top of the Android screen", act(vec![swipe((0.5, 0.01), (0.5, 0.6))]))
            .step("Tap the Dark theme tile", act(vec![tap(0.62, 0.3)]))
            .keywords(&[K_ANDROID]),
        TutorialPlan::video(Bilibili, "https://www.bilibili.com/video/BV1chrome04/?spm_id_from=333.1", "Clear Chrome history fast", "Clear the browsing history in Chrome", Desktop, TranscriptPlan::Asr)
            .step("Open the Chrome menu", act(vec![click(0.97, 0.05)]))
            .step("Open History from the Chrome menu", act(vec![click(0.8, 0.21)]))
            .step("Press the clear data shortcut and confirm", act(vec![hot_key("ctrl+shift+delete"), click(0.76, 0.88)]))
            .keywords(&[K_CHROME]),
        v5,
        v6,
        v7,
        {
            let mut t = TutorialPlan::video(YouTube, "unbox000008", "Unboxing the new laptop", "Unbox a laptop", Desktop, TranscriptPlan::Captions)
                .step("Open the laptop box", act(vec![click(0.5, 0.5)]))
                .step("Peel off the screen film", act(vec![click(0.5, 0.5)]))
                .keywords(&[K_GMAIL]);
            t.gui = false;
            t
        },
        TutorialPlan::video(TikTok, "https://www.tiktok.com/@tips/video/7234567890123456789?is_from_webapp=1", "Mute any WhatsApp chat", "Mute a chat in WhatsApp", Mobile, TranscriptPlan::Captions)
            .step("Long press the chat in WhatsApp", act(vec![long_press("1.5", 0.5, 0.32)]))
            .step("Tap the mute icon at the top", act(vec![tap(0.72, 0.06)]))
            .keywords(&[K_WHATSAPP, K_ANDROID]),
        TutorialPlan::article(WikiHow, "https://www.wikihow.com/Change-Font-Size-in-Word", "Change font size in Word", "Change font size in Word", Desktop)
            .images(&[Screenshot, Screenshot, Screenshot])
            .step("Highlight the text you want to change in Word", act(vec![drag((0.1, 0.4), (0.7, 0.45))]))
            .step("Click the Font Size drop-down on the Home tab", act(vec![click(0.3, 0.12)]))
            .step("Choose 16 from the list", act(vec![click(0.3, 0.41)]))
            .keywords(&[K_WORD])
            .tags(&tag),
        TutorialPlan::article(WikiHow, "https://www.wikihow.com/Sort-a-Column-in-Excel", "Sort a column in Excel", "Sort a column alphabetically in Excel", Desktop)
            .images(&[Screenshot, Screenshot])
            .step("Select any cell in the Excel column", act(vec![click(0.25, 0.3)]))
            .step("Go to the Data tab of the ribbon", act(vec![click(0.52, 0.05)]))
            .step("Click the A to Z sort button", act(vec![click(0.47, 0.11)]))
            .step("Check the sorted result", act(vec![scroll("down", 0.5, 0.6)]))
            .keywords(&[K_EXCEL]),
        broken,
        a3,
        TutorialPlan::article(WikiHow, "https://www.wikihow.com/Clear-History-in-Chrome", "Clear your history in Chrome", "Delete browsing history in Chrome", Desktop)
            .images(&[JpegScreenshot, Screenshot, Screenshot])
            .step("Click the three-dot menu in Chrome", act(vec![click(0.97, 0.06)]))
            .step("Select History twice", act(vec![click(0.78, 0.22), click(0.6, 0.22)]))
            .step("Click Clear browsing data", act(vec![click(0.1, 0.3)]))
            .keywords(&[K_CHROME]),
        TutorialPlan::article(WikiHow, "https://www.wikihow.com/Set-an-Alarm-on-an-iPhone", "Set an alarm on your iPhone", "Create an alarm in the iPhone Clock app", Mobile)
            .images(&[Screenshot, Screenshot, Screenshot])
            .step("Tap the Alarm tab in Clock", OutOfRange)
            .step("Tap the plus icon", act(vec![tap(0.93, 0.07)]))
            .step("Set the time and tap Save", act(vec![swipe((0.4, 0.6), (0.4, 0.45)), tap(0.9, 0.07)]))
            .keywords(&[K_IPHONE]),
        a6,
        a7,
        non_gui("https://www.wikihow.com/Bake-Banana-Bread", "Bake banana bread", "Bake a loaf of banana bread", K_GMAIL),
        non_gui("https://www.wikihow.com/Fix-a-Bike-Chain", "Fix a bicycle chain", "Reattach a slipped bicycle chain", K_PHOTOSHOP),
        non_gui("https://www.wikihow.com/Knit-a-Scarf", "Knit a scarf", "Knit a simple scarf", K_IPHONE),
        non_gui("https://www.wikihow.com/Assemble-a-Bookshelf", "Assemble a bookshelf", "Assemble a flat-pack bookshelf", K_WHATSAPP),
        a12,
        TutorialPlan::article(WikiHow, "https://www.wikihow.com/Mute-a-Chat-on-WhatsApp", "Mute a chat on WhatsApp", "Mute a WhatsApp group chat", Mobile)
            .images(&[Photo, Photo])
            .step("Open the WhatsApp group", act(vec![tap(0.5, 0.3)]))
            .keywords(&[K_WHATSAPP]),
        TutorialPlan::article(WikiHow, "https://www.wikihow.com/Rename-a-File-on-a-Mac", "Rename a file in Finder", "Rename a file with Finder on a Mac", Desktop)
            .images(&[Screenshot, Screenshot])
            .step("Select the file in Finder", Malformed)
            .step("Press Return and type the new name", Malformed)
            .tags(&tag),
        a15,
        TutorialPlan::article(WikiHow, "https://www.wikihow.com/Pin-an-App-to-the-Taskbar", "Pin an app to the Windows taskbar", "Pin an app to the taskbar in Windows", Desktop)
            .images(&[Corrupt, Screenshot, Screenshot])
            .step("Find the app in the Windows Start menu", act(vec![click(0.02, 0.98)]))
            .step("Drag the app icon onto the taskbar", act(vec![drag((0.2, 0.4), (0.35, 0.97))]))
            .tags(&tag),
        a17,
        a18,
    ];
    CorpusPlan {
        seeds,
        expansions,
        keyword_target: 8,
        keywords: Vec::new(),
        tags: vec![BUNDLED_TAG.to_string()],
        tutorials,
    }
}

/// An article corpus engineered for a known funnel: 100 search hits, 90
/// distinct tutorials, 60 GUI tutorials and 33 kept by the judge.
pub fn retention_plan() -> CorpusPlan {
    let keywords: Vec<String> = (0..10).map(|k| format!("Notes app workflow {k}")).collect();
    let tutorials = (0..90)
        .map(|i| {
            let mut kws = vec![keywords[i % 10].as_str()];
            if i < 10 {
                kws.push(keywords[(i + 1) % 10].as_str());
            }
            let mut t = TutorialPlan::article(
                SourceKind::Fixture,
                &format!("notes-{i:03}"),
                &format!("Notes app guide number {i:03}"),
                &format!("Complete Notes app workflow {i:03}"),
                Desktop,
            )
            .images(&[Screenshot])
            .step(&format!("Click the toolbar button for workflow {i:03}"), act(vec![click(0.4, 0.1)]))
            .keywords(&kws);
            t.gui = i < 60;
            if (33..60).contains(&i) {
                t.judge_drops = vec![(1, DropReason::IncoherentActions)];
            }
            t
        })
        .collect();
    CorpusPlan {
        seeds: Vec::new(),
        expansions: Vec::new(),
        keyword_target: 0,
        keywords,
        tags: Vec::new(),
        tutorials,
    }
}
