//! Deterministic fixture generators used by tests, the bundled corpus and
//! the `fixtures` CLI command.

pub mod corpus;
pub mod script;
pub mod video;

pub use corpus::{bundled_plan, retention_plan, write_corpus, CorpusPlan, TutorialPlan};
pub use script::{ScriptBook, ScriptReply, ScriptRule, ScriptedCall, ScriptedTransport};
pub use video::{synthetic_frames, synthetic_raw_stream, VideoSpec};
