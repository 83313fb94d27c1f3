//! Keyword construction, source adapters, crawling and deduplication.

mod adapter;
mod corpus;
pub mod fixture;
mod keywords;
pub mod youtube;

pub use adapter::{AdapterError, SourceAdapter};
pub use corpus::{crawl_corpus, dedup_tutorials, CrawlLimits, CrawlReport, ItemError, QueryKind, QueryReport};
pub use fixture::{FixtureAdapter, FixtureEntry, FixtureManifest, FixtureVideo};
pub use keywords::{expand_keywords, KeywordError, KeywordExpansion, TaskSeed};
pub use youtube::YouTubeAdapter;
