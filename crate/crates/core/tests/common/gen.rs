//! Proptest generators for well-formed actions and trajectories.

use proptest::prelude::*;
use tutraj::types::{
    Action, ActionKind, ImageRef, Platform, Point, Position, PositionRule, SourceId, SourceKind, ThoughtAction,
    TrajStep, Trajectory,
};

/// A point on the 4-decimal grid, so encodings are exact.
pub fn point() -> impl Strategy<Value = Point> {
    (0u32..=10_000, 0u32..=10_000).prop_map(|(x, y)| Point::new(x as f64 / 10_000.0, y as f64 / 10_000.0))
}

fn is_absent_marker(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t.eq_ignore_ascii_case("none") || t.eq_ignore_ascii_case("null")
}

fn value_for(kind: ActionKind) -> BoxedStrategy<Option<String>> {
    match kind {
        ActionKind::Input => "[A-Za-z0-9][A-Za-z0-9 .,@\"\\\\/-]{0,24}"
            .prop_filter("absent marker", |s| !is_absent_marker(s))
            .prop_map(Some)
            .boxed(),
        ActionKind::Scroll => prop::sample::select(vec!["up", "down", "left", "right"])
            .prop_map(|s| Some(s.to_string()))
            .boxed(),
        ActionKind::HotKey => prop::sample::select(vec!["ctrl+c", "ctrl+v", "enter", "alt+tab", "ctrl+shift+s"])
            .prop_map(|s| Some(s.to_string()))
            .boxed(),
        ActionKind::LongPress => (1u32..100).prop_map(|d| Some(format!("{}", d as f64 / 10.0))).boxed(),
        _ => Just(None).boxed(),
    }
}

fn position_for(kind: ActionKind) -> BoxedStrategy<Option<Position>> {
    match kind.position_rule() {
        PositionRule::None => Just(None).boxed(),
        PositionRule::Point => point().prop_map(|p| Some(Position::Point(p))).boxed(),
        PositionRule::Pair => (point(), point()).prop_map(|(a, b)| Some(Position::PointPair(a, b))).boxed(),
    }
}

pub fn action_of(kinds: Vec<ActionKind>) -> impl Strategy<Value = Action> {
    prop::sample::select(kinds)
        .prop_flat_map(|k| (Just(k), value_for(k), position_for(k)))
        .prop_map(|(k, v, p)| Action::new(k, v, p))
}

pub fn action() -> impl Strategy<Value = Action> {
    action_of(ActionKind::ALL.to_vec())
}

/// Single-line thought without a colon and without surrounding blanks.
pub fn thought() -> impl Strategy<Value = String> {
    "[A-Za-z]([A-Za-z0-9 ,.'?!()-]{0,60}[A-Za-z0-9.!?])?"
}

pub fn thought_action() -> impl Strategy<Value = ThoughtAction> {
    (thought(), prop::collection::vec(action(), 1..4)).prop_map(|(t, a)| ThoughtAction::new(t, a))
}

fn gui_kinds(platform: Platform) -> Vec<ActionKind> {
    ActionKind::ALL
        .into_iter()
        .filter(|k| k.allowed_on(platform) && !k.is_non_gui())
        .collect()
}

pub fn image_ref() -> impl Strategy<Value = ImageRef> {
    "[0-9a-f]{64}".prop_map(|h| ImageRef(format!("{h}.png")))
}

pub fn trajectory_with_len(len: std::ops::Range<usize>) -> impl Strategy<Value = Trajectory> {
    let platform = prop::sample::select(vec![Platform::Mobile, Platform::Desktop]);
    (platform, "[a-z0-9]{4,11}", 0usize..4, thought())
        .prop_flat_map(move |(platform, native, ordinal, task)| {
            let step = (
                image_ref(),
                thought(),
                prop::collection::vec(action_of(gui_kinds(platform)), 1..3),
                thought(),
            )
                .prop_map(|(observation, t, actions, rough)| TrajStep {
                    observation,
                    thought_action: ThoughtAction::new(t, actions),
                    source_rough_description: rough,
                });
            (Just((platform, native, ordinal, task)), prop::collection::vec(step, len.clone()))
        })
        .prop_map(|((platform, native, ordinal, task), steps)| {
            let provenance = SourceId {
                source: SourceKind::WikiHow,
                native_id: native,
            };
            Trajectory {
                id: Trajectory::trajectory_id(&provenance, ordinal),
                task,
                platform,
                provenance,
                steps,
            }
        })
}

pub fn trajectory() -> impl Strategy<Value = Trajectory> {
    trajectory_with_len(1..7)
}
