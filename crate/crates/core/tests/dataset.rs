mod common;

use std::fs;

use common::{gen, processed};
use proptest::prelude::*;
use tutraj::dataset::{
    compute_stats, export_sft, read_dataset, read_manifest, render_sft_sample, write_dataset, DatasetError,
    DatasetMeta, IMAGES_DIR, TRAJECTORIES_FILE,
};
use tutraj::store::BlobStore;
use tutraj::types::{Action, ActionKind, Platform, ThoughtAction, TrajStep, Trajectory};

fn meta() -> DatasetMeta {
    DatasetMeta {
        version: "0.1.0".into(),
        created_at: "2024-01-01T00:00:00Z".into(),
    }
}

/// Trajectory with `len` stored steps whose actions are `kinds` cycled.
fn stored(store: &BlobStore, id: usize, len: usize, platform: Platform, kinds: &[ActionKind]) -> Trajectory {
    let mut tut = processed(len, platform, store);
    tut.id.native_id = format!("tut-{id}");
    Trajectory {
        id: Trajectory::trajectory_id(&tut.id, 0),
        task: tut.task.clone(),
        platform,
        provenance: tut.id.clone(),
        steps: tut
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| TrajStep {
                observation: s.observation.clone(),
                thought_action: ThoughtAction::new(
                    format!("Thought {}", i + 1),
                    vec![Action::at(kinds[i % kinds.len()], 0.1 * (i + 1) as f64, 0.5)],
                ),
                source_rough_description: s.rough_description.clone(),
            })
            .collect(),
    }
}

#[test]
fn write_then_read_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let store = BlobStore::open(dir.path().join("store")).unwrap();
    let trajs: Vec<_> = (0..3).map(|i| stored(&store, i, i + 1, Platform::Desktop, &[ActionKind::Click])).collect();
    let out = dir.path().join("ds");
    let m = write_dataset(trajs.clone(), &out, &store, &meta()).unwrap();
    assert_eq!(m.trajectory_count, 3);
    assert_eq!(m.step_count, 6);
    assert_eq!(read_manifest(&out).unwrap(), m);
    let text = fs::read_to_string(out.join(TRAJECTORIES_FILE)).unwrap();
    assert_eq!(text.lines().count(), 3);
    let back: Vec<_> = read_dataset(&out).unwrap().collect::<Result<_, _>>().unwrap();
    assert_eq!(back, trajs);
    // Shared observations are stored once.
    assert_eq!(fs::read_dir(out.join(IMAGES_DIR)).unwrap().count(), 3);
    assert_eq!(m.image_count, 3);
}

#[test]
fn out_of_range_coordinates_are_schema_violations() {
    let dir = tempfile::tempdir().unwrap();
    let store = BlobStore::open(dir.path().join("store")).unwrap();
    let t = stored(&store, 0, 2, Platform::Desktop, &[ActionKind::Click]);
    let good = serde_json::to_string(&t).unwrap();
    let bad = good.replacen("[0.1000,0.5000]", "[1.2000,0.5000]", 1);
    assert_ne!(good, bad);
    let file = dir.path().join("t.jsonl");
    fs::write(&file, format!("{good}\n{bad}\n")).unwrap();
    let items: Vec<_> = read_dataset(&file).unwrap().collect();
    assert!(items[0].is_ok());
    assert!(matches!(items[1], Err(DatasetError::SchemaViolation { line: 2, .. })));
}

#[test]
fn invalid_trajectories_are_not_written() {
    let dir = tempfile::tempdir().unwrap();
    let store = BlobStore::open(dir.path().join("store")).unwrap();
    let mut t = stored(&store, 0, 1, Platform::Desktop, &[ActionKind::Click]);
    t.steps[0].thought_action.actions = vec![Action::at(ActionKind::Drag, 0.5, 0.5)];
    let r = write_dataset([t], &dir.path().join("ds"), &store, &meta());
    assert!(matches!(r, Err(DatasetError::InvalidTrajectory { .. })));
}

#[test]
fn sft_history_examples() {
    let dir = tempfile::tempdir().unwrap();
    let store = BlobStore::open(dir.path()).unwrap();
    let t = stored(&store, 0, 5, Platform::Mobile, &[ActionKind::Tap]);
    let steps = |i, n| {
        let s = render_sft_sample(&t, i, n).unwrap();
        (s.history.iter().map(|h| h.step).collect::<Vec<_>>(), s.image_count())
    };
    assert_eq!(steps(1, 2), (vec![], 1));
    assert_eq!(steps(4, 2), (vec![2, 3], 3));
    assert_eq!(steps(2, 2), (vec![1], 2));
    assert_eq!(steps(5, 0), (vec![], 1));
    assert!(render_sft_sample(&t, 0, 2).is_err());
    assert!(render_sft_sample(&t, 6, 2).is_err());
}

#[test]
fn export_counts_every_step() {
    let dir = tempfile::tempdir().unwrap();
    let store = BlobStore::open(dir.path()).unwrap();
    let trajs: Vec<_> = [1, 3, 4]
        .iter()
        .enumerate()
        .map(|(i, &n)| Ok(stored(&store, i, n, Platform::Desktop, &[ActionKind::Click])))
        .collect();
    assert_eq!(export_sft(trajs, 2).count(), 8);
    assert_eq!(export_sft(Vec::new(), 2).count(), 0);
}

#[test]
fn stats_examples() {
    let dir = tempfile::tempdir().unwrap();
    let store = BlobStore::open(dir.path()).unwrap();
    // Ten one-step trajectories: six clicks on desktop, four taps on mobile.
    let mut trajs: Vec<_> = (0..6).map(|i| stored(&store, i, 1, Platform::Desktop, &[ActionKind::Click])).collect();
    trajs.extend((6..10).map(|i| stored(&store, i, 1, Platform::Mobile, &[ActionKind::Tap])));
    let s = compute_stats(&trajs);
    assert_eq!(s.action_kinds["CLICK"].count, 6);
    assert_eq!(s.action_kinds["TAP"].count, 4);
    assert_eq!(s.action_kinds["CLICK"].percent, 60.0);
    assert_eq!(s.action_kinds.len(), 2);

    let trajs: Vec<_> = [1, 1, 2, 3]
        .iter()
        .enumerate()
        .map(|(i, &n)| stored(&store, i, n, Platform::Desktop, &[ActionKind::Click]))
        .collect();
    let s = compute_stats(&trajs);
    let counts: Vec<_> = ["1", "2", "3", "4"].iter().map(|k| s.step_lengths[*k].count).collect();
    assert_eq!(counts, [2, 1, 1, 0]);
    assert_eq!(s.steps, 7);

    let s = compute_stats(&[]);
    assert_eq!((s.trajectories, s.steps, s.actions), (0, 0, 0));
    assert!(s.step_lengths.values().all(|r| r.count == 0 && r.percent == 0.0));
    assert!(s.action_kinds.is_empty() && s.platforms.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stats_ignore_order(trajs in prop::collection::vec(gen::trajectory_with_len(1..12), 0..10), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = trajs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(compute_stats(&trajs), compute_stats(&shuffled));
    }

    #[test]
    fn sft_samples_per_step(trajs in prop::collection::vec(gen::trajectory(), 0..6), n in 0usize..4) {
        let total: usize = trajs.iter().map(|t| t.len()).sum();
        let lines: Vec<_> = export_sft(trajs.iter().cloned().map(Ok), n).collect::<Result<_, _>>().unwrap();
        prop_assert_eq!(lines.len(), total);
        for l in &lines {
            let s = &l.sample;
            prop_assert!(l.images.len() <= n + 1);
            prop_assert_eq!(l.images.len(), (s.step - 1).min(n) + 1);
            let want: Vec<usize> = (s.step - (s.step - 1).min(n)..s.step).collect();
            prop_assert_eq!(s.history.iter().map(|h| h.step).collect::<Vec<_>>(), want);
            prop_assert_eq!(l.prompt.matches("<image>").count(), l.images.len());
        }
    }
}
