mod common;

use common::gen;
use proptest::prelude::*;
use serde_json::json;
use tutraj::dataset::parse_line;
use tutraj::grammar::{parse_agent_output, serialize_thought_action};
use tutraj::types::{validate_action, Action, ActionKind, Point, Position, Trajectory};

/// Hand-copied action-space table: (kind, value required, position shape).
/// Shape: 0 none, 1 single point, 2 start and end.
const TABLE: [(ActionKind, bool, u8); 16] = [
    (ActionKind::Click, false, 1),
    (ActionKind::Input, true, 1),
    (ActionKind::Scroll, true, 1),
    (ActionKind::LeftClickDouble, false, 1),
    (ActionKind::RightClickSingle, false, 1),
    (ActionKind::Drag, false, 2),
    (ActionKind::HotKey, true, 0),
    (ActionKind::Hover, false, 1),
    (ActionKind::Wait, false, 0),
    (ActionKind::Finish, false, 0),
    (ActionKind::Tap, false, 1),
    (ActionKind::Swipe, false, 2),
    (ActionKind::LongPress, true, 1),
    (ActionKind::PressHome, false, 0),
    (ActionKind::PressBack, false, 0),
    (ActionKind::CallUser, false, 0),
];

fn good_value(kind: ActionKind) -> &'static str {
    match kind {
        ActionKind::Scroll => "down",
        ActionKind::LongPress => "1.5",
        ActionKind::HotKey => "ctrl+s",
        _ => "hello",
    }
}

#[derive(Debug, Clone, Copy)]
enum ValueCase {
    Absent,
    Good,
    Blank,
    Junk,
}

#[derive(Debug, Clone, Copy)]
enum PosCase {
    Absent,
    Point,
    Pair,
    OutOfRange,
}

fn expected(kind: ActionKind, v: ValueCase, p: PosCase) -> bool {
    let (_, needs_value, shape) = TABLE.iter().copied().find(|r| r.0 == kind).unwrap();
    let value_ok = match (needs_value, v) {
        (false, ValueCase::Absent) => true,
        (false, _) => false,
        (true, ValueCase::Good) => true,
        // Free-text kinds accept any non-blank string.
        (true, ValueCase::Junk) => matches!(kind, ActionKind::Input | ActionKind::HotKey),
        (true, _) => false,
    };
    let pos_ok = matches!((shape, p), (0, PosCase::Absent) | (1, PosCase::Point) | (2, PosCase::Pair));
    value_ok && pos_ok
}

#[test]
fn table_matches_kind_rules() {
    use tutraj::types::{PositionRule, ValueRule};
    for (kind, needs_value, shape) in TABLE {
        assert_eq!(kind.value_rule() == ValueRule::Required, needs_value, "{kind}");
        let got = match kind.position_rule() {
            PositionRule::None => 0,
            PositionRule::Point => 1,
            PositionRule::Pair => 2,
        };
        assert_eq!(got, shape, "{kind}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2048))]

    #[test]
    fn validate_action_truth_table(
        k in 0usize..16,
        v in prop::sample::select(vec![ValueCase::Absent, ValueCase::Good, ValueCase::Blank, ValueCase::Junk]),
        p in prop::sample::select(vec![PosCase::Absent, PosCase::Point, PosCase::Pair, PosCase::OutOfRange]),
        a in gen::point(),
        b in gen::point(),
    ) {
        let kind = TABLE[k].0;
        let value = match v {
            ValueCase::Absent => None,
            ValueCase::Good => Some(good_value(kind).to_string()),
            ValueCase::Blank => Some("  ".to_string()),
            ValueCase::Junk => Some("sideways".to_string()),
        };
        let position = match p {
            PosCase::Absent => None,
            PosCase::Point => Some(Position::Point(a)),
            PosCase::Pair => Some(Position::PointPair(a, b)),
            PosCase::OutOfRange => Some(Position::Point(Point::new(1.0 + a.x() + 1e-3, a.y()))),
        };
        let action = Action::new(kind, value, position);
        prop_assert_eq!(validate_action(&action).is_ok(), expected(kind, v, p), "{:?}", action);
    }

    #[test]
    fn generated_actions_are_valid(a in gen::action()) {
        prop_assert_eq!(validate_action(&a), Ok(()));
    }

    #[test]
    fn grammar_round_trip(ta in gen::thought_action()) {
        let text = serialize_thought_action(&ta);
        let back = parse_agent_output(&text).unwrap();
        prop_assert_eq!(&back, &ta);
        prop_assert_eq!(serialize_thought_action(&back), text);
    }

    #[test]
    fn trajectory_json_round_trip(t in gen::trajectory()) {
        prop_assert_eq!(t.validate(), Ok(()));
        let line = serde_json::to_string(&t).unwrap();
        let back: Trajectory = parse_line(&line, 1).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), line);
    }
}

#[test]
fn coordinates_are_written_with_four_decimals() {
    let a = Action::new(
        ActionKind::Drag,
        None,
        Some(Position::PointPair(Point::new(0.1, 0.2), Point::new(1.0, 0.0))),
    );
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        r#"{"action":"DRAG","value":null,"position":[[0.1000,0.2000],[1.0000,0.0000]]}"#
    );
}

#[test]
fn none_marker_and_null_decode_alike() {
    for v in [json!("None"), json!(null), json!(""), json!("null")] {
        let a: Action = serde_json::from_value(json!({"action": "CLICK", "value": v, "position": [0.5, 0.5]})).unwrap();
        assert_eq!(a.value, None);
    }
    let a: Action = serde_json::from_value(json!({"action": "FINISH"})).unwrap();
    assert_eq!(a, Action::bare(ActionKind::Finish));
}
