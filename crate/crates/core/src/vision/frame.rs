//! Frame sources for video tutorials.
//!
//! # Raw-frame stream
//!
//! A 24-byte little-endian header followed by tightly packed frames until EOF:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `RAWF`                            |
//! | 4      | 1    | version, always 1                       |
//! | 5      | 1    | pixel format: 0 = gray8, 1 = rgb24      |
//! | 6      | 2    | reserved, 0                             |
//! | 8      | 4    | width (u32)                             |
//! | 12     | 4    | height (u32)                            |
//! | 16     | 4    | fps numerator (u32)                     |
//! | 20     | 4    | fps denominator (u32, non-zero)         |
//!
//! Frame `i` has timestamp `i * den / num` seconds. An external decoder can
//! produce this stream on its stdout.
//!
//! # Frame directory
//!
//! `manifest.json` (`{"fps": 10.0, "frames": [{"file": "000000.png", "timestamp_s": 0.0}, ...]}`)
//! next to zero-padded frame images.

use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdout, Command, Stdio};

use image::{GrayImage, ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const RAW_MAGIC: &[u8; 4] = b"RAWF";
pub const RAW_VERSION: u8 = 1;
pub const RAW_HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PixelFormat {
    Gray8,
    Rgb24,
}

impl PixelFormat {
    pub fn bytes_per_pixel(self) -> usize {
        match self {
            PixelFormat::Gray8 => 1,
            PixelFormat::Rgb24 => 3,
        }
    }

    fn code(self) -> u8 {
        match self {
            PixelFormat::Gray8 => 0,
            PixelFormat::Rgb24 => 1,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(PixelFormat::Gray8),
            1 => Some(PixelFormat::Rgb24),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("bad raw-frame header: {0}")]
    Header(String),
    #[error("truncated frame {index}: got {got} of {want} bytes")]
    Truncated { index: u64, got: usize, want: usize },
    #[error("frame {index} is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch {
        index: u64,
        got_w: u32,
        got_h: u32,
        want_w: u32,
        want_h: u32,
    },
    #[error("image: {0}")]
    Image(#[from] image::ImageError),
    #[error("manifest: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: u64,
    pub timestamp_s: f64,
    pub width: u32,
    pub height: u32,
    pub format: PixelFormat,
    pub data: Vec<u8>,
}

impl Frame {
    pub fn gray(index: u64, timestamp_s: f64, img: GrayImage) -> Self {
        Self {
            index,
            timestamp_s,
            width: img.width(),
            height: img.height(),
            format: PixelFormat::Gray8,
            data: img.into_raw(),
        }
    }

    /// Luma as BT.601 integer weights.
    pub fn to_gray(&self) -> GrayImage {
        let data = match self.format {
            PixelFormat::Gray8 => self.data.clone(),
            PixelFormat::Rgb24 => self
                .data
                .chunks_exact(3)
                .map(|p| {
                    let (r, g, b) = (p[0] as u32, p[1] as u32, p[2] as u32);
                    ((299 * r + 587 * g + 114 * b + 500) / 1000) as u8
                })
                .collect(),
        };
        GrayImage::from_raw(self.width, self.height, data).expect("frame buffer size")
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, FrameError> {
        let mut out = io::Cursor::new(Vec::new());
        match self.format {
            PixelFormat::Gray8 => GrayImage::from_raw(self.width, self.height, self.data.clone())
                .expect("frame buffer size")
                .write_to(&mut out, ImageFormat::Png)?,
            PixelFormat::Rgb24 => RgbImage::from_raw(self.width, self.height, self.data.clone())
                .expect("frame buffer size")
                .write_to(&mut out, ImageFormat::Png)?,
        }
        Ok(out.into_inner())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawStreamHeader {
    pub format: PixelFormat,
    pub width: u32,
    pub height: u32,
    pub fps_num: u32,
    pub fps_den: u32,
}

impl RawStreamHeader {
    pub fn fps(&self) -> f64 {
        self.fps_num as f64 / self.fps_den as f64
    }

    pub fn frame_len(&self) -> usize {
        self.width as usize * self.height as usize * self.format.bytes_per_pixel()
    }

    pub fn timestamp(&self, index: u64) -> f64 {
        index as f64 * self.fps_den as f64 / self.fps_num as f64
    }

    pub fn to_bytes(&self) -> [u8; RAW_HEADER_LEN] {
        let mut b = [0u8; RAW_HEADER_LEN];
        b[0..4].copy_from_slice(RAW_MAGIC);
        b[4] = RAW_VERSION;
        b[5] = self.format.code();
        b[8..12].copy_from_slice(&self.width.to_le_bytes());
        b[12..16].copy_from_slice(&self.height.to_le_bytes());
        b[16..20].copy_from_slice(&self.fps_num.to_le_bytes());
        b[20..24].copy_from_slice(&self.fps_den.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8; RAW_HEADER_LEN]) -> Result<Self, FrameError> {
        let bad = |m: &str| FrameError::Header(m.to_string());
        if &b[0..4] != RAW_MAGIC {
            return Err(bad("magic is not RAWF"));
        }
        if b[4] != RAW_VERSION {
            return Err(bad("unsupported version"));
        }
        let format = PixelFormat::from_code(b[5]).ok_or_else(|| bad("unknown pixel format"))?;
        let u32_at = |i: usize| u32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]]);
        let h = RawStreamHeader {
            format,
            width: u32_at(8),
            height: u32_at(12),
            fps_num: u32_at(16),
            fps_den: u32_at(20),
        };
        if h.width == 0 || h.height == 0 {
            return Err(bad("zero dimension"));
        }
        if h.fps_num == 0 || h.fps_den == 0 {
            return Err(bad("zero fps term"));
        }
        Ok(h)
    }
}

pub struct RawFrameReader<R: Read> {
    inner: R,
    header: RawStreamHeader,
    next_index: u64,
    done: bool,
}

impl<R: Read> RawFrameReader<R> {
    pub fn new(mut inner: R) -> Result<Self, FrameError> {
        let mut hb = [0u8; RAW_HEADER_LEN];
        inner.read_exact(&mut hb)?;
        let header = RawStreamHeader::from_bytes(&hb)?;
        Ok(Self {
            inner,
            header,
            next_index: 0,
            done: false,
        })
    }

    pub fn header(&self) -> RawStreamHeader {
        self.header
    }
}

impl RawFrameReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self, FrameError> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read> Iterator for RawFrameReader<R> {
    type Item = Result<Frame, FrameError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let want = self.header.frame_len();
        let mut buf = vec![0u8; want];
        let mut got = 0;
        while got < want {
            match self.inner.read(&mut buf[got..]) {
                Ok(0) => break,
                Ok(n) => got += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
        }
        if got == 0 {
            self.done = true;
            return None;
        }
        let index = self.next_index;
        if got < want {
            self.done = true;
            return Some(Err(FrameError::Truncated { index, got, want }));
        }
        self.next_index += 1;
        Some(Ok(Frame {
            index,
            timestamp_s: self.header.timestamp(index),
            width: self.header.width,
            height: self.header.height,
            format: self.header.format,
            data: buf,
        }))
    }
}

pub struct RawFrameWriter<W: Write> {
    inner: W,
    header: RawStreamHeader,
}

impl<W: Write> RawFrameWriter<W> {
    pub fn new(mut inner: W, header: RawStreamHeader) -> io::Result<Self> {
        inner.write_all(&header.to_bytes())?;
        Ok(Self { inner, header })
    }

    pub fn write_frame(&mut self, data: &[u8]) -> io::Result<()> {
        if data.len() != self.header.frame_len() {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "frame size mismatch"));
        }
        self.inner.write_all(data)
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Spawn an external decoder that writes a raw-frame stream to stdout.
pub fn spawn_decoder(program: &str, args: &[String]) -> Result<(Child, RawFrameReader<ChildStdout>), FrameError> {
    let mut child = Command::new(program)
        .args(args)
        .stdout(Stdio::piped())
        .stdin(Stdio::null())
        .spawn()?;
    let stdout = child
        .stdout
        .take()
        .ok_or_else(|| FrameError::Header("decoder has no stdout".into()))?;
    let reader = RawFrameReader::new(stdout)?;
    Ok((child, reader))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDirEntry {
    pub file: String,
    pub timestamp_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDirManifest {
    pub fps: f64,
    pub frames: Vec<FrameDirEntry>,
}

pub const FRAME_DIR_MANIFEST: &str = "manifest.json";

pub fn frame_file_name(index: u64) -> String {
    format!("{index:06}.png")
}

/// Reads a frame directory in manifest order; all frames must share dimensions.
pub struct FrameDirReader {
    root: PathBuf,
    manifest: FrameDirManifest,
    next: usize,
    dims: Option<(u32, u32)>,
}

impl FrameDirReader {
    pub fn open(root: &Path) -> Result<Self, FrameError> {
        let raw = std::fs::read(root.join(FRAME_DIR_MANIFEST))?;
        let manifest: FrameDirManifest =
            serde_json::from_slice(&raw).map_err(|e| FrameError::Manifest(e.to_string()))?;
        let sorted = manifest
            .frames
            .windows(2)
            .all(|w| w[0].timestamp_s <= w[1].timestamp_s);
        if !sorted {
            return Err(FrameError::Manifest("timestamps are not sorted".into()));
        }
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
            next: 0,
            dims: None,
        })
    }

    pub fn manifest(&self) -> &FrameDirManifest {
        &self.manifest
    }
}

impl Iterator for FrameDirReader {
    type Item = Result<Frame, FrameError>;

    fn next(&mut self) -> Option<Self::Item> {
        let entry = self.manifest.frames.get(self.next)?.clone();
        let index = self.next as u64;
        self.next += 1;
        let load = || -> Result<Frame, FrameError> {
            let img = image::open(self.root.join(&entry.file))?;
            let frame = match img {
                image::DynamicImage::ImageLuma8(g) => Frame::gray(index, entry.timestamp_s, g),
                other => {
                    let rgb = other.to_rgb8();
                    Frame {
                        index,
                        timestamp_s: entry.timestamp_s,
                        width: rgb.width(),
                        height: rgb.height(),
                        format: PixelFormat::Rgb24,
                        data: rgb.into_raw(),
                    }
                }
            };
            Ok(frame)
        };
        let result = load().and_then(|f| match self.dims {
            Some((w, h)) if (w, h) != (f.width, f.height) => Err(FrameError::DimensionMismatch {
                index,
                got_w: f.width,
                got_h: f.height,
                want_w: w,
                want_h: h,
            }),
            _ => {
                self.dims = Some((f.width, f.height));
                Ok(f)
            }
        });
        Some(result)
    }
}

/// Write frames as a frame directory (used by fixtures and tests).
pub fn write_frame_dir(root: &Path, fps: f64, frames: &[Frame]) -> Result<(), FrameError> {
    std::fs::create_dir_all(root)?;
    let mut entries = Vec::with_capacity(frames.len());
    for f in frames {
        let name = frame_file_name(f.index);
        std::fs::write(root.join(&name), f.encode_png()?)?;
        entries.push(FrameDirEntry {
            file: name,
            timestamp_s: f.timestamp_s,
        });
    }
    let manifest = FrameDirManifest {
        fps,
        frames: entries,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| FrameError::Manifest(e.to_string()))?;
    std::fs::write(root.join(FRAME_DIR_MANIFEST), text)?;
    Ok(())
}
