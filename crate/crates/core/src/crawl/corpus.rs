use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use super::adapter::SourceAdapter;
use crate::store::BlobStore;
use crate::types::{canonicalize_source_id, RawTutorial, SourceId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrawlLimits {
    /// Results taken from one adapter for one keyword or tag.
    pub per_keyword: Option<usize>,
    /// Results taken from one adapter over the whole crawl.
    pub per_source: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Keyword,
    Tag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryReport {
    pub adapter: String,
    pub kind: QueryKind,
    pub query: String,
    pub hits: usize,
    pub taken: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemError {
    pub adapter: String,
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CrawlReport {
    pub queries: Vec<QueryReport>,
    pub errors: Vec<ItemError>,
    pub downloaded: usize,
}

/// Query every adapter with every keyword (and tag, where supported),
/// apply caps, then download. Output order is adapter, query, rank.
pub fn crawl_corpus(
    adapters: &[&dyn SourceAdapter],
    keywords: &[String],
    tags: &[String],
    limits: CrawlLimits,
    store: &BlobStore,
) -> (Vec<RawTutorial>, CrawlReport) {
    let mut report = CrawlReport::default();
    let mut plan: Vec<(usize, SourceId)> = Vec::new();

    for (ai, adapter) in adapters.iter().enumerate() {
        let queries: Vec<(QueryKind, &String)> = keywords
            .iter()
            .map(|k| (QueryKind::Keyword, k))
            .chain(tags.iter().map(|t| (QueryKind::Tag, t)))
            .collect();
        let results: Vec<Option<Result<Vec<SourceId>, String>>> = queries
            .par_iter()
            .map(|(kind, q)| match kind {
                QueryKind::Keyword => Some(adapter.search(q).map_err(|e| e.to_string())),
                QueryKind::Tag => adapter.search_by_tag(q).map(|r| r.map_err(|e| e.to_string())),
            })
            .collect();

        let mut budget = limits.per_source.unwrap_or(usize::MAX);
        for ((kind, q), res) in queries.iter().zip(results) {
            let Some(res) = res else { continue };
            let (ids, error) = match res {
                Ok(ids) => (ids, None),
                Err(e) => {
                    warn!(adapter = adapter.name(), query = %q, error = %e, "search failed");
                    (Vec::new(), Some(e))
                }
            };
            let cap = limits.per_keyword.unwrap_or(usize::MAX).min(budget);
            let taken = ids.len().min(cap);
            budget -= taken;
            report.queries.push(QueryReport {
                adapter: adapter.name().to_string(),
                kind: *kind,
                query: q.to_string(),
                hits: ids.len(),
                taken,
                error,
            });
            plan.extend(ids.into_iter().take(taken).map(|id| (ai, id)));
        }
    }

    let mut unique: Vec<(usize, SourceId)> = Vec::new();
    let mut seen = HashSet::new();
    for item in &plan {
        if seen.insert(item.clone()) {
            unique.push(item.clone());
        }
    }
    let fetched: BTreeMap<(usize, SourceId), Result<RawTutorial, String>> = unique
        .into_par_iter()
        .map(|(ai, id)| {
            let r = adapters[ai].download(&id, store).map_err(|e| e.to_string());
            ((ai, id), r)
        })
        .collect();

    let mut out = Vec::new();
    for (ai, id) in plan {
        match &fetched[&(ai, id.clone())] {
            Ok(t) => out.push(t.clone()),
            Err(e) => {
                warn!(adapter = adapters[ai].name(), trace_id = %id.key(), error = %e, "download failed");
                report.errors.push(ItemError {
                    adapter: adapters[ai].name().to_string(),
                    id: id.key(),
                    error: e.clone(),
                });
            }
        }
    }
    report.downloaded = out.len();
    info!(crawled = out.len(), errors = report.errors.len(), "crawl finished");
    (out, report)
}

fn dedup_key(id: &SourceId) -> String {
    canonicalize_source_id(&id.native_id, id.source)
        .map(|c| c.key())
        .unwrap_or_else(|_| id.key())
}

/// Keep the first tutorial per canonical id, preserving order.
pub fn dedup_tutorials(tutorials: Vec<RawTutorial>) -> Vec<RawTutorial> {
    let mut seen = HashSet::new();
    tutorials
        .into_iter()
        .filter(|t| seen.insert(dedup_key(&t.id)))
        .collect()
}
