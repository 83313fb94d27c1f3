//! Turn multimodal web tutorials into GUI-agent trajectory datasets.
//!
//! Stages: crawl and deduplicate tutorials, extract a task with per-step
//! screenshots and rough instructions, let a zero-shot GUI agent produce
//! thoughts and actions for each step, then filter the results. Datasets
//! are stored as JSONL with content-addressed images, and can be exported
//! as supervised fine-tuning samples or summarized into statistics.

pub mod crawl;
pub mod dataset;
pub mod eval;
pub mod filter;
pub mod generate;
pub mod grammar;
pub mod pipeline;
pub mod services;
pub mod store;
pub mod synth;
pub mod text;
pub mod types;
pub mod vision;
