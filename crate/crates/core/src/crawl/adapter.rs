use thiserror::Error;

use crate::store::BlobStore;
use crate::types::{RawTutorial, SourceId, SourceKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdapterError {
    #[error("search failed: {0}")]
    Search(String),
    #[error("download of {id} failed: {reason}")]
    Download { id: String, reason: String },
    #[error("{0} is not supported by this adapter")]
    Unsupported(&'static str),
    #[error("{0} not found")]
    NotFound(String),
}

/// A tutorial source. Implementations must tolerate concurrent calls.
pub trait SourceAdapter: Send + Sync {
    fn name(&self) -> &str;

    fn kind(&self) -> SourceKind;

    /// Canonical ids matching a keyword, without repeats, in ranking order.
    fn search(&self, keyword: &str) -> Result<Vec<SourceId>, AdapterError>;

    /// Tag-based listing for article sites. `None` when unsupported.
    fn search_by_tag(&self, _tag: &str) -> Option<Result<Vec<SourceId>, AdapterError>> {
        None
    }

    /// Fetch one tutorial, storing its media in `store`. Idempotent.
    fn download(&self, id: &SourceId, store: &BlobStore) -> Result<RawTutorial, AdapterError>;
}
