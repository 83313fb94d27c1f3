//! Independent reference implementations shared by integration tests.
#![allow(dead_code)]

use tutraj::vision::{Frame, GmmParams};

/// Per-pixel mixture written directly from the update rules, one `Vec`
/// of components per pixel, with no shared state between pixels.
#[derive(Debug, Clone, Copy)]
pub struct Comp {
    pub w: f64,
    pub mu: f64,
    pub var: f64,
}

pub struct GmmOracle {
    pub p: GmmParams,
    pub pixels: Vec<Vec<Comp>>,
}

impl GmmOracle {
    pub fn new(n_pixels: usize, p: GmmParams) -> Self {
        Self {
            p,
            pixels: vec![Vec::new(); n_pixels],
        }
    }

    pub fn step(&mut self, frame: &[u8]) -> Vec<bool> {
        let p = self.p;
        frame
            .iter()
            .zip(self.pixels.iter_mut())
            .map(|(&v, comps)| oracle_pixel(&p, comps, v as f64))
            .collect()
    }
}

fn oracle_pixel(p: &GmmParams, comps: &mut Vec<Comp>, x: f64) -> bool {
    let alpha = 1.0 / p.history as f64;

    let mut matched: Option<usize> = None;
    for (i, c) in comps.iter().enumerate() {
        let d2 = (x - c.mu) * (x - c.mu);
        if d2 > p.var_threshold * c.var {
            continue;
        }
        let better = match matched {
            None => true,
            Some(j) => {
                let dj = (x - comps[j].mu) * (x - comps[j].mu);
                d2 / c.var < dj / comps[j].var
            }
        };
        if better {
            matched = Some(i);
        }
    }

    let background = matched.is_some_and(|mi| {
        let mut order: Vec<(f64, usize)> = comps.iter().enumerate().map(|(i, c)| (c.w / c.var.sqrt(), i)).collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let pos = order.iter().position(|&(_, i)| i == mi).unwrap();
        let ahead: f64 = order[..pos].iter().fold(0.0, |acc, &(_, i)| acc + comps[i].w);
        ahead < 1.0 - p.background_ratio
    });

    for (i, c) in comps.iter_mut().enumerate() {
        if Some(i) == matched {
            let w_hat = c.w + alpha * (1.0 - c.w);
            let rate = alpha / w_hat;
            let diff = x - c.mu;
            c.mu += rate * diff;
            c.var = (c.var + rate * (diff * diff - c.var)).clamp(p.var_min, p.var_max);
            c.w = w_hat - alpha * p.complexity_prior;
        } else {
            c.w = c.w + alpha * (0.0 - c.w) - alpha * p.complexity_prior;
        }
    }
    comps.retain(|c| c.w > 0.0);

    if matched.is_none() {
        let fresh = Comp {
            w: alpha,
            mu: x,
            var: p.var_init,
        };
        if comps.len() < p.max_components {
            comps.push(fresh);
        } else {
            let mut weakest = 0;
            for i in 1..comps.len() {
                if comps[i].w < comps[weakest].w {
                    weakest = i;
                }
            }
            comps[weakest] = fresh;
        }
    }

    let total: f64 = comps.iter().map(|c| c.w).sum();
    for c in comps.iter_mut() {
        c.w /= total;
    }
    !background
}

/// Cut finder by thresholded mean absolute difference between neighbours.
pub fn mad_cuts(frames: &[Frame], threshold: f64) -> Vec<u64> {
    frames
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (w[0].to_gray(), w[1].to_gray());
            let sum: u64 = a
                .as_raw()
                .iter()
                .zip(b.as_raw())
                .map(|(x, y)| (*x as i32 - *y as i32).unsigned_abs() as u64)
                .sum();
            let mad = sum as f64 / a.as_raw().len() as f64;
            (mad > threshold).then_some(w[1].index)
        })
        .collect()
}

/// Maximal runs of `true` as inclusive-exclusive index ranges, by scanning
/// every start and extending as far as possible.
pub fn maximal_runs(mask: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || (start > 0 && mask[start - 1]) {
            continue;
        }
        let mut end = start;
        while end < mask.len() && mask[end] {
            end += 1;
        }
        runs.push((start, end));
    }
    runs
}
pub mod gen;

/// Compare `actual` against a committed golden file under `fixtures/golden`.
/// Set `TUTRAJ_BLESS=1` to rewrite the file instead.
pub fn assert_golden(name: &str, actual: &[u8]) {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/golden").join(name);
    if std::env::var_os("TUTRAJ_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read(&path).unwrap_or_else(|e| panic!("golden {}: {e}", path.display()));
    assert!(
        expected == actual,
        "{} differs from golden:\n{}",
        name,
        String::from_utf8_lossy(actual)
    );
}

/// Client whose every chat call answers `text`.
pub fn replying(name: &str, text: &str) -> tutraj::services::ServiceClient {
    replying_with(name, std::sync::Arc::new(tutraj::services::FnTransport::constant(
        tutraj::services::wire::chat_reply_body(text),
    )))
}

pub fn replying_with(
    name: &str,
    t: std::sync::Arc<tutraj::services::FnTransport>,
) -> tutraj::services::ServiceClient {
    let mut ep = tutraj::services::ServiceEndpoint::new("http://mock/v1");
    ep.max_retries = 1;
    tutraj::services::ServiceClient::with_clock(name, ep, t, std::sync::Arc::new(tutraj::services::ManualClock::default()))
}

/// Client whose service is always down.
pub fn unavailable(name: &str) -> tutraj::services::ServiceClient {
    replying_with(
        name,
        std::sync::Arc::new(tutraj::services::FnTransport::new(|_| {
            Ok(tutraj::services::HttpReply::status(503))
        })),
    )
}

pub fn article(source: tutraj::types::SourceKind, native_id: &str, title: &str) -> tutraj::types::RawTutorial {
    use tutraj::types::*;
    RawTutorial {
        id: SourceId {
            source,
            native_id: native_id.to_string(),
        },
        modality: Modality::Article,
        textual: TextBundle {
            title: title.to_string(),
            body: String::new(),
            step_texts: Vec::new(),
            transcript: None,
        },
        visual: VisualBundle::Article { images: Vec::new() },
    }
}

/// A distinct small PNG per seed.
pub fn tiny_png(seed: u8) -> Vec<u8> {
    let img = image::RgbImage::from_pixel(4, 4, image::Rgb([seed, 255 - seed, seed / 2]));
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).unwrap();
    out.into_inner()
}

/// Processed tutorial with `n` steps described as `step 1`..`step n`, each
/// with its own observation stored in `store`.
pub fn processed(
    n: usize,
    platform: tutraj::types::Platform,
    store: &tutraj::store::BlobStore,
) -> tutraj::types::ProcessedTutorial {
    use tutraj::types::*;
    ProcessedTutorial {
        id: SourceId {
            source: SourceKind::Fixture,
            native_id: "tut-1".into(),
        },
        task: "Change the font size".into(),
        platform,
        steps: (1..=n)
            .map(|i| StepPair {
                index: i,
                observation: store.put_image(&tiny_png(i as u8)).unwrap(),
                rough_description: format!("step {i}"),
            })
            .collect(),
    }
}

pub fn fixture_dir(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// `<sha256>  <relative path>` for every file under `root`, sorted by path.
pub fn tree_digest(root: &std::path::Path) -> String {
    use sha2::{Digest, Sha256};
    fn walk(dir: &std::path::Path, out: &mut Vec<std::path::PathBuf>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, out);
            } else {
                out.push(p);
            }
        }
    }
    let mut files = Vec::new();
    walk(root, &mut files);
    let mut rows: Vec<(String, String)> = files
        .iter()
        .map(|p| {
            let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            let sum = Sha256::digest(std::fs::read(p).unwrap());
            let hex: String = sum.iter().map(|b| format!("{b:02x}")).collect();
            (rel, hex)
        })
        .collect();
    rows.sort();
    rows.iter().map(|(p, h)| format!("{h}  {p}\n")).collect()
}

/// Replay config for a committed bundle, writing into `work`.
pub fn bundle_config(bundle: &str, work: &std::path::Path, workers: usize) -> tutraj::pipeline::Config {
    let mut cfg = tutraj::pipeline::Config::load(&fixture_dir(bundle).join("config.toml")).unwrap();
    cfg.run.work_dir = work.to_path_buf();
    cfg.run.workers = workers;
    cfg
}
