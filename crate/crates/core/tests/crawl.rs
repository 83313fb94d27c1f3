mod common;

use std::collections::HashSet;

use common::{article, replying};
use proptest::prelude::*;
use tutraj::crawl::{
    crawl_corpus, dedup_tutorials, expand_keywords, CrawlLimits, FixtureAdapter, FixtureEntry, FixtureManifest,
    KeywordError, SourceAdapter, TaskSeed,
};
use tutraj::store::BlobStore;
use tutraj::types::{RawTutorial, SourceKind};

fn entry(id: &str, keyword: &str, fail: bool) -> FixtureEntry {
    FixtureEntry {
        source: SourceKind::Fixture,
        id: id.to_string(),
        keywords: vec![keyword.to_string()],
        tags: Vec::new(),
        title: format!("Tutorial {id}"),
        body: String::new(),
        step_texts: vec!["Open the app.".into()],
        transcript: None,
        images: Vec::new(),
        video: None,
        audio: None,
        fail_download: fail,
    }
}

fn adapter(root: &std::path::Path, fail: bool) -> FixtureAdapter {
    let entries = ["a1", "a2", "a3"]
        .into_iter()
        .map(|id| entry(id, "word font size", fail))
        .chain(["b1", "b2", "b3"].into_iter().map(|id| entry(id, "excel chart", fail)))
        .collect();
    FixtureAdapter::new("fixture", root, FixtureManifest { entries }).unwrap()
}

fn keywords() -> Vec<String> {
    vec!["Word font size".into(), "Excel chart".into()]
}

fn ids(ts: &[RawTutorial]) -> Vec<String> {
    ts.iter().map(|t| t.id.native_id.clone()).collect()
}

#[test]
fn expansion_puts_seed_first() {
    let llm = replying("llm", r#"{"keywords": ["Word font size shortcut", "Word enlarge text", "Word set font"]}"#);
    let out = expand_keywords(&[TaskSeed::new("Word", "changing font size")], &llm, 10).unwrap();
    assert_eq!(out.keywords.len(), 4);
    assert_eq!(out.keywords[0], "Word changing font size");
    assert!(!out.malformed_response);
}

#[test]
fn empty_expansion_returns_seeds() {
    let llm = replying("llm", r#"{"keywords": []}"#);
    let seeds = [TaskSeed::new("Word", "changing font size"), TaskSeed::new("Excel", "insert chart")];
    let out = expand_keywords(&seeds, &llm, 10).unwrap();
    assert_eq!(out.keywords, vec!["Word changing font size", "Excel insert chart"]);
}

#[test]
fn seed_duplicates_are_removed() {
    let llm = replying("llm", r#"{"keywords": ["word CHANGING font size", "Word  changing font size", "Word bold"]}"#);
    let out = expand_keywords(&[TaskSeed::new("Word", "changing font size")], &llm, 10).unwrap();
    assert_eq!(out.keywords, vec!["Word changing font size", "Word bold"]);
}

#[test]
fn unusable_reply_falls_back_to_seeds() {
    let llm = replying("llm", "sorry, I cannot help");
    let out = expand_keywords(&[TaskSeed::new("Word", "bold")], &llm, 5).unwrap();
    assert_eq!(out.keywords, vec!["Word bold"]);
    assert!(out.malformed_response);
}

#[test]
fn expansion_rejects_bad_input() {
    let llm = replying("llm", "{}");
    assert!(matches!(expand_keywords(&[], &llm, 3), Err(KeywordError::NoSeeds)));
    assert!(matches!(
        expand_keywords(&[TaskSeed::new("", "x")], &llm, 3),
        Err(KeywordError::EmptySeed(_))
    ));
    let two = [TaskSeed::new("a", "b"), TaskSeed::new("c", "d")];
    assert!(matches!(expand_keywords(&two, &llm, 1), Err(KeywordError::TargetTooSmall { .. })));
}

#[test]
fn crawl_yields_every_hit_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let store = BlobStore::open(dir.path().join("store")).unwrap();
    let a = adapter(dir.path(), false);
    let adapters: [&dyn SourceAdapter; 1] = [&a];
    let (out, report) = crawl_corpus(&adapters, &keywords(), &[], CrawlLimits::default(), &store);
    assert_eq!(ids(&out), ["a1", "a2", "a3", "b1", "b2", "b3"]);
    assert_eq!(report.downloaded, 6);
    assert!(report.errors.is_empty());
    let (again, _) = crawl_corpus(&adapters, &keywords(), &[], CrawlLimits::default(), &store);
    assert_eq!(again, out);
}

#[test]
fn failed_downloads_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let store = BlobStore::open(dir.path().join("store")).unwrap();
    let a = adapter(dir.path(), true);
    let (out, report) = crawl_corpus(&[&a as &dyn SourceAdapter], &keywords()[..1], &[], CrawlLimits::default(), &store);
    assert!(out.is_empty());
    assert_eq!(report.errors.len(), 3);
}

#[test]
fn per_keyword_cap_applies() {
    let dir = tempfile::tempdir().unwrap();
    let store = BlobStore::open(dir.path().join("store")).unwrap();
    let a = adapter(dir.path(), false);
    let limits = CrawlLimits {
        per_keyword: Some(1),
        per_source: None,
    };
    let (out, _) = crawl_corpus(&[&a as &dyn SourceAdapter], &keywords(), &[], limits, &store);
    assert_eq!(ids(&out), ["a1", "b1"]);
    let limits = CrawlLimits {
        per_keyword: None,
        per_source: Some(4),
    };
    let (out, _) = crawl_corpus(&[&a as &dyn SourceAdapter], &keywords(), &[], limits, &store);
    assert_eq!(ids(&out), ["a1", "a2", "a3", "b1"]);
}

#[test]
fn dedup_examples() {
    let a = article(SourceKind::WikiHow, "https://www.wikihow.com/A", "A");
    let b = article(SourceKind::WikiHow, "https://www.wikihow.com/B", "B");
    assert_eq!(dedup_tutorials(vec![a.clone(), b.clone(), a.clone()]), vec![a.clone(), b.clone()]);
    assert_eq!(dedup_tutorials(vec![a.clone(), b.clone()]), vec![a, b]);

    let short = article(SourceKind::YouTube, "https://youtu.be/abc123?si=Q", "short link");
    let long = article(SourceKind::YouTube, "abc123", "watch page");
    assert_eq!(dedup_tutorials(vec![short.clone(), long]), vec![short]);
}

fn pool() -> impl Strategy<Value = Vec<RawTutorial>> {
    let spellings = prop::sample::select(vec![
        (SourceKind::YouTube, "abc123"),
        (SourceKind::YouTube, "https://youtu.be/abc123"),
        (SourceKind::YouTube, "xyz789"),
        (SourceKind::Bilibili, "BV1xx411c7mD"),
        (SourceKind::WikiHow, "https://www.wikihow.com/Change-Font"),
        (SourceKind::WikiHow, "https://wikihow.com/Change-Font/?utm_source=x"),
        (SourceKind::Fixture, "f1"),
        (SourceKind::Fixture, "f2"),
    ]);
    prop::collection::vec((spellings, 0u8..3), 0..16)
        .prop_map(|v| v.into_iter().map(|((k, id), t)| article(k, id, &format!("title {t}"))).collect())
}

fn canonical(t: &RawTutorial) -> String {
    tutraj::types::canonicalize_source_id(&t.id.native_id, t.id.source).unwrap().key()
}

proptest! {
    #[test]
    fn dedup_is_idempotent_and_order_preserving(input in pool()) {
        let once = dedup_tutorials(input.clone());
        prop_assert_eq!(dedup_tutorials(once.clone()), once.clone());
        prop_assert!(once.len() <= input.len());
        // First occurrence per canonical id, in input order.
        let mut seen = HashSet::new();
        let expected: Vec<_> = input.iter().filter(|t| seen.insert(canonical(t))).cloned().collect();
        prop_assert_eq!(&once, &expected);
        let keys: HashSet<_> = once.iter().map(canonical).collect();
        prop_assert_eq!(keys.len(), once.len());
    }

    #[test]
    fn expansion_contains_every_seed(
        seeds in prop::collection::vec(("[A-Z][a-z]{1,6}", "[a-z]{2,8}( [a-z]{2,8})?"), 1..4),
        proposals in prop::collection::vec("[A-Za-z ]{0,20}", 0..8),
        extra in 0usize..6,
    ) {
        let seeds: Vec<TaskSeed> = seeds.into_iter().map(|(a, t)| TaskSeed::new(a, t)).collect();
        let reply = serde_json::json!({"keywords": proposals}).to_string();
        let out = expand_keywords(&seeds, &replying("llm", &reply), seeds.len() + extra).unwrap();
        let lower: HashSet<String> = out.keywords.iter().map(|k| k.to_lowercase()).collect();
        for s in &seeds {
            prop_assert!(lower.contains(&s.render().to_lowercase()));
        }
        prop_assert_eq!(lower.len(), out.keywords.len());
        prop_assert!(out.keywords.len() <= seeds.len() + extra);
    }
}
