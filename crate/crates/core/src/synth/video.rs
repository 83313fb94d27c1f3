//! Deterministic synthetic screen recordings: a static desktop-like layout
//! with a panel that jumps to a new place and shade at every hard cut.

use image::{GrayImage, Luma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::vision::{Frame, PixelFormat, RawFrameWriter, RawStreamHeader};

#[derive(Debug, Clone, PartialEq)]
pub struct VideoSpec {
    pub width: u32,
    pub height: u32,
    pub frames: u64,
    pub fps: u32,
    /// Frame indices where the scene changes.
    pub cuts: Vec<u64>,
    pub seed: u64,
    /// Per-pixel uniform noise amplitude.
    pub noise: u8,
}

impl VideoSpec {
    pub fn new(width: u32, height: u32, frames: u64, cuts: Vec<u64>, seed: u64) -> Self {
        Self {
            width,
            height,
            frames,
            fps: 10,
            cuts,
            seed,
            noise: 2,
        }
    }

    pub fn header(&self) -> RawStreamHeader {
        RawStreamHeader {
            format: PixelFormat::Gray8,
            width: self.width,
            height: self.height,
            fps_num: self.fps,
            fps_den: 1,
        }
    }
}

const PANEL_SHADES: [u8; 2] = [40, 140];

fn scene(spec: &VideoSpec, s: usize) -> GrayImage {
    let (w, h) = (spec.width, spec.height);
    let mut img = GrayImage::from_pixel(w, h, Luma([235]));
    // Title bar and a sidebar shared by every scene.
    for y in 0..(h / 8).max(1) {
        for x in 0..w {
            img.put_pixel(x, y, Luma([90]));
        }
    }
    for y in 0..h {
        for x in 0..(w / 6).max(1) {
            img.put_pixel(x, y, Luma([200]));
        }
    }
    if s == 0 {
        return img;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ (s as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let pw = (w as f64 * rng.random_range(0.45..0.6)) as u32;
    let ph = (h as f64 * rng.random_range(0.45..0.6)) as u32;
    let x0 = rng.random_range(0..=(w - pw));
    let y0 = rng.random_range(0..=(h - ph));
    let shade = PANEL_SHADES[s % 2];
    for y in y0..y0 + ph {
        for x in x0..x0 + pw {
            img.put_pixel(x, y, Luma([shade]));
        }
    }
    img
}

pub fn synthetic_frames(spec: &VideoSpec) -> Vec<Frame> {
    let scenes: Vec<GrayImage> = (0..=spec.cuts.len()).map(|s| scene(spec, s)).collect();
    let mut noise = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(1));
    let amp = spec.noise as i16;
    (0..spec.frames)
        .map(|t| {
            let s = spec.cuts.iter().filter(|&&c| c <= t).count();
            let mut img = scenes[s].clone();
            if amp > 0 {
                for p in img.pixels_mut() {
                    let v = p.0[0] as i16 + noise.random_range(-amp..=amp);
                    p.0[0] = v.clamp(0, 255) as u8;
                }
            }
            Frame::gray(t, t as f64 / spec.fps as f64, img)
        })
        .collect()
}

/// The same frames as a raw-frame stream.
pub fn synthetic_raw_stream(spec: &VideoSpec) -> Vec<u8> {
    let mut w = RawFrameWriter::new(Vec::new(), spec.header()).expect("in-memory write");
    for f in synthetic_frames(spec) {
        w.write_frame(&f.data).expect("in-memory write");
    }
    w.finish().expect("in-memory write")
}
