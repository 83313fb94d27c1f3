use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::types::DropReason;

/// One line of a stage's `drops.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropRecord {
    pub stage: String,
    /// Tutorial key, or trajectory id in later stages.
    pub id: String,
    pub reason: DropReason,
    pub detail: String,
}

impl DropRecord {
    pub fn new(stage: &str, id: impl Into<String>, reason: DropReason, detail: impl Into<String>) -> Self {
        Self {
            stage: stage.to_string(),
            id: id.into(),
            reason,
            detail: detail.into(),
        }
    }
}

pub fn write_jsonl<'a, T, I>(path: &Path, items: I) -> Result<u64, PipelineError>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let mut out = BufWriter::new(File::create(path).map_err(PipelineError::io(path))?);
    let mut n = 0;
    for item in items {
        let line = serde_json::to_string(item).expect("record serialization");
        writeln!(out, "{line}").map_err(PipelineError::io(path))?;
        n += 1;
    }
    out.flush().map_err(PipelineError::io(path))?;
    Ok(n)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let f = File::open(path).map_err(PipelineError::io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(PipelineError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| PipelineError::Decode {
            path: path.to_path_buf(),
            line: i + 1,
            detail: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serialization");
    text.push('\n');
    fs::write(path, text).map_err(PipelineError::io(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let raw = fs::read(path).map_err(PipelineError::io(path))?;
    serde_json::from_slice(&raw).map_err(|e| PipelineError::Decode {
        path: path.to_path_buf(),
        line: e.line(),
        detail: e.to_string(),
    })
}

/// Create an empty output directory, clearing an existing one only when
/// `overwrite` is set.
pub fn prepare_output(dir: &Path, overwrite: bool) -> Result<(), PipelineError> {
    if dir.exists() {
        let non_empty = fs::read_dir(dir).map_err(PipelineError::io(dir))?.next().is_some();
        if non_empty {
            if !overwrite {
                return Err(PipelineError::OutputExists { path: dir.to_path_buf() });
            }
            fs::remove_dir_all(dir).map_err(PipelineError::io(dir))?;
        }
    }
    fs::create_dir_all(dir).map_err(PipelineError::io(dir))
}

pub fn require_input(stage: &'static str, path: &Path) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::StageInputMissing {
            stage,
            path: path.to_path_buf(),
        })
    }
}
