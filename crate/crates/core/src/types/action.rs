//! The GUI action vocabulary shared by desktop and mobile trajectories.
//!
//! Positions are normalized screen coordinates in `[0, 1]`. Every coordinate
//! is snapped to a 1e-4 grid on construction so that the fixed 4-decimal
//! on-disk encoding round-trips exactly.

use std::fmt;

use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;
use serde_json::Value;
use thiserror::Error;

use super::Platform;

/// Number of grid steps per unit of normalized coordinate.
pub const COORD_SCALE: f64 = 10_000.0;

/// Snap a coordinate onto the 4-decimal grid.
pub fn quantize(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    (v * COORD_SCALE).round() / COORD_SCALE
}

/// Fixed 4-decimal rendering used by every on-disk and prompt encoding.
pub fn format_coord(v: f64) -> String {
    format!("{:.4}", v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    x: f64,
    y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self {
            x: quantize(x),
            y: quantize(y),
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn in_unit_square(&self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Position {
    Point(Point),
    PointPair(Point, Point),
}

impl Position {
    pub fn points(&self) -> Vec<Point> {
        match *self {
            Position::Point(p) => vec![p],
            Position::PointPair(a, b) => vec![a, b],
        }
    }

    fn shape(&self) -> PositionRule {
        match self {
            Position::Point(_) => PositionRule::Point,
            Position::PointPair(..) => PositionRule::Pair,
        }
    }

    /// `[x,y]` or `[[x1,y1],[x2,y2]]` with 4-decimal coordinates.
    pub fn to_json_text(&self) -> String {
        let pt = |p: &Point| format!("[{}, {}]", format_coord(p.x), format_coord(p.y));
        match self {
            Position::Point(p) => pt(p),
            Position::PointPair(a, b) => format!("[{}, {}]", pt(a), pt(b)),
        }
    }

    fn to_compact_json_text(&self) -> String {
        let pt = |p: &Point| format!("[{},{}]", format_coord(p.x), format_coord(p.y));
        match self {
            Position::Point(p) => pt(p),
            Position::PointPair(a, b) => format!("[{},{}]", pt(a), pt(b)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    Click,
    Input,
    Scroll,
    LeftClickDouble,
    RightClickSingle,
    Drag,
    HotKey,
    Hover,
    Wait,
    Finish,
    Tap,
    Swipe,
    LongPress,
    PressHome,
    PressBack,
    CallUser,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueRule {
    Forbidden,
    Required,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionRule {
    None,
    Point,
    Pair,
}

impl ActionKind {
    pub const ALL: [ActionKind; 16] = [
        ActionKind::Click,
        ActionKind::Input,
        ActionKind::Scroll,
        ActionKind::LeftClickDouble,
        ActionKind::RightClickSingle,
        ActionKind::Drag,
        ActionKind::HotKey,
        ActionKind::Hover,
        ActionKind::Wait,
        ActionKind::Finish,
        ActionKind::Tap,
        ActionKind::Swipe,
        ActionKind::LongPress,
        ActionKind::PressHome,
        ActionKind::PressBack,
        ActionKind::CallUser,
    ];

    /// Wire name as it appears in the agent's `"action"` field.
    pub fn wire_name(self) -> &'static str {
        match self {
            ActionKind::Click => "CLICK",
            ActionKind::Input => "INPUT",
            ActionKind::Scroll => "SCROLL",
            ActionKind::LeftClickDouble => "LEFT_CLICK_DOUBLE",
            ActionKind::RightClickSingle => "RIGHT_CLICK_SINGLE",
            ActionKind::Drag => "DRAG",
            ActionKind::HotKey => "HOT_KEY",
            ActionKind::Hover => "HOVER",
            ActionKind::Wait => "WAIT",
            ActionKind::Finish => "FINISH",
            ActionKind::Tap => "TAP",
            ActionKind::Swipe => "SWIPE",
            ActionKind::LongPress => "LONG_PRESS",
            ActionKind::PressHome => "PRESS_HOME",
            ActionKind::PressBack => "PRESS_BACK",
            ActionKind::CallUser => "CALL_USER",
        }
    }

    /// Accepts the wire name in any case, with `-` or spaces instead of `_`.
    pub fn from_wire_name(name: &str) -> Option<Self> {
        let norm: String = name
            .trim()
            .chars()
            .map(|c| match c {
                '-' | ' ' => '_',
                c => c.to_ascii_uppercase(),
            })
            .collect();
        let kind = match norm.as_str() {
            "CLICK" => ActionKind::Click,
            "INPUT" | "TYPE" => ActionKind::Input,
            "SCROLL" => ActionKind::Scroll,
            "LEFT_CLICK_DOUBLE" => ActionKind::LeftClickDouble,
            "RIGHT_CLICK_SINGLE" => ActionKind::RightClickSingle,
            "DRAG" => ActionKind::Drag,
            "HOT_KEY" | "HOTKEY" => ActionKind::HotKey,
            "HOVER" => ActionKind::Hover,
            "WAIT" => ActionKind::Wait,
            "FINISH" => ActionKind::Finish,
            "TAP" => ActionKind::Tap,
            "SWIPE" => ActionKind::Swipe,
            "LONG_PRESS" => ActionKind::LongPress,
            "PRESS_HOME" => ActionKind::PressHome,
            "PRESS_BACK" => ActionKind::PressBack,
            "CALL_USER" => ActionKind::CallUser,
            _ => return None,
        };
        Some(kind)
    }

    pub fn value_rule(self) -> ValueRule {
        match self {
            ActionKind::Input | ActionKind::Scroll | ActionKind::HotKey | ActionKind::LongPress => {
                ValueRule::Required
            }
            _ => ValueRule::Forbidden,
        }
    }

    pub fn position_rule(self) -> PositionRule {
        match self {
            ActionKind::Click
            | ActionKind::Input
            | ActionKind::Scroll
            | ActionKind::LeftClickDouble
            | ActionKind::RightClickSingle
            | ActionKind::Hover
            | ActionKind::Tap
            | ActionKind::LongPress => PositionRule::Point,
            ActionKind::Drag | ActionKind::Swipe => PositionRule::Pair,
            ActionKind::HotKey
            | ActionKind::Wait
            | ActionKind::Finish
            | ActionKind::PressHome
            | ActionKind::PressBack
            | ActionKind::CallUser => PositionRule::None,
        }
    }

    /// Whether the kind belongs to the action space of `platform`.
    ///
    /// `Wait` and `CallUser` are accepted on both platforms; they are
    /// screened as non-GUI signals rather than as platform violations.
    pub fn allowed_on(self, platform: Platform) -> bool {
        use ActionKind::*;
        match self {
            Input | Finish | Wait | CallUser => true,
            Click | Scroll | LeftClickDouble | RightClickSingle | Drag | HotKey | Hover => {
                platform == Platform::Desktop
            }
            Tap | Swipe | LongPress | PressHome | PressBack => platform == Platform::Mobile,
        }
    }

    pub fn is_non_gui(self) -> bool {
        matches!(self, ActionKind::Wait | ActionKind::CallUser)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.wire_name())
    }
}

impl Serialize for ActionKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.wire_name())
    }
}

impl<'de> Deserialize<'de> for ActionKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ActionKind::from_wire_name(&s)
            .ok_or_else(|| D::Error::custom(format!("unknown action kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub kind: ActionKind,
    pub value: Option<String>,
    pub position: Option<Position>,
}

impl Action {
    pub fn new(kind: ActionKind, value: Option<String>, position: Option<Position>) -> Self {
        Self {
            kind,
            value,
            position,
        }
    }

    pub fn at(kind: ActionKind, x: f64, y: f64) -> Self {
        Self::new(kind, None, Some(Position::Point(Point::new(x, y))))
    }

    pub fn bare(kind: ActionKind) -> Self {
        Self::new(kind, None, None)
    }

    /// One action in the agent prompt format:
    /// `{"action": "CLICK", "value": "None", "position": [0.3200, 0.1100]}`.
    pub fn to_prompt_json(&self) -> String {
        let value = match &self.value {
            Some(v) => serde_json::to_string(v).expect("string serialization"),
            None => "\"None\"".to_string(),
        };
        let position = match &self.position {
            Some(p) => p.to_json_text(),
            None => "\"None\"".to_string(),
        };
        format!(
            "{{\"action\": \"{}\", \"value\": {}, \"position\": {}}}",
            self.kind.wire_name(),
            value,
            position
        )
    }

    /// Structural decode from a JSON object. `"None"`, `null` and a missing
    /// key all mean "not applicable". Range checks are left to
    /// [`validate_action`].
    pub fn from_json_value(v: &Value) -> Result<Self, ActionDecodeError> {
        let obj = v.as_object().ok_or(ActionDecodeError::NotAnObject)?;
        let kind_raw = obj
            .get("action")
            .and_then(Value::as_str)
            .ok_or(ActionDecodeError::MissingKind)?;
        let kind = ActionKind::from_wire_name(kind_raw)
            .ok_or_else(|| ActionDecodeError::UnknownKind(kind_raw.to_string()))?;
        let value = match obj.get("value") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) if is_none_marker(s) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Number(n)) => Some(n.to_string()),
            Some(other) => return Err(ActionDecodeError::BadValue(other.to_string())),
        };
        let position = match obj.get("position") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) if is_none_marker(s) => None,
            Some(p) => Some(decode_position(p)?),
        };
        Ok(Action {
            kind,
            value,
            position,
        })
    }
}

fn is_none_marker(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t.eq_ignore_ascii_case("none") || t.eq_ignore_ascii_case("null")
}

fn decode_point(v: &Value) -> Option<Point> {
    let arr = v.as_array()?;
    if arr.len() != 2 {
        return None;
    }
    let x = arr[0].as_f64()?;
    let y = arr[1].as_f64()?;
    Some(Point::new(x, y))
}

fn decode_position(v: &Value) -> Result<Position, ActionDecodeError> {
    let bad = || ActionDecodeError::BadPosition(v.to_string());
    let arr = v.as_array().ok_or_else(bad)?;
    if arr.len() != 2 {
        return Err(bad());
    }
    if arr.iter().all(Value::is_number) {
        return decode_point(v).map(Position::Point).ok_or_else(bad);
    }
    let a = decode_point(&arr[0]).ok_or_else(bad)?;
    let b = decode_point(&arr[1]).ok_or_else(bad)?;
    Ok(Position::PointPair(a, b))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActionDecodeError {
    #[error("action is not a JSON object")]
    NotAnObject,
    #[error("missing \"action\" field")]
    MissingKind,
    #[error("unknown action kind `{0}`")]
    UnknownKind(String),
    #[error("value must be a string, got {0}")]
    BadValue(String),
    #[error("position must be [x,y] or [[x1,y1],[x2,y2]], got {0}")]
    BadPosition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionField {
    Value,
    Position,
}

impl fmt::Display for ActionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActionField::Value => "value",
            ActionField::Position => "position",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {kind} action: {field} {reason}")]
pub struct ValidationError {
    pub kind: ActionKind,
    pub field: ActionField,
    pub reason: String,
}

pub const SCROLL_DIRECTIONS: [&str; 4] = ["up", "down", "left", "right"];

/// Check an action against the action-space table.
pub fn validate_action(a: &Action) -> Result<(), ValidationError> {
    let err = |field, reason: &str| ValidationError {
        kind: a.kind,
        field,
        reason: reason.to_string(),
    };

    match (a.kind.value_rule(), &a.value) {
        (ValueRule::Forbidden, Some(_)) => {
            return Err(err(ActionField::Value, "is not applicable"));
        }
        (ValueRule::Required, None) => return Err(err(ActionField::Value, "is required")),
        (ValueRule::Required, Some(v)) if v.trim().is_empty() => {
            return Err(err(ActionField::Value, "must be non-empty"));
        }
        (ValueRule::Required, Some(v)) => match a.kind {
            ActionKind::Scroll if !SCROLL_DIRECTIONS.contains(&v.trim().to_ascii_lowercase().as_str()) => {
                return Err(err(ActionField::Value, "must be one of up/down/left/right"));
            }
            ActionKind::LongPress => match v.trim().parse::<f64>() {
                Ok(d) if d.is_finite() && d > 0.0 => {}
                _ => return Err(err(ActionField::Value, "must be a positive duration in seconds")),
            },
            _ => {}
        },
        (ValueRule::Forbidden, None) => {}
    }

    let rule = a.kind.position_rule();
    match (&a.position, rule) {
        (None, PositionRule::None) => {}
        (Some(_), PositionRule::None) => {
            return Err(err(ActionField::Position, "is not applicable"));
        }
        (None, PositionRule::Point) => return Err(err(ActionField::Position, "requires [x,y]")),
        (None, PositionRule::Pair) | (Some(Position::Point(_)), PositionRule::Pair) => {
            let name = match a.kind {
                ActionKind::Drag => "Drag",
                _ => "Swipe",
            };
            return Err(err(
                ActionField::Position,
                &format!("{name} requires start and end"),
            ));
        }
        (Some(p), want) => {
            if p.shape() != want {
                return Err(err(ActionField::Position, "requires a single [x,y]"));
            }
            if !p.points().iter().all(Point::in_unit_square) {
                return Err(err(ActionField::Position, "out of [0,1]"));
            }
        }
    }
    Ok(())
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(3))?;
        map.serialize_entry("action", self.kind.wire_name())?;
        map.serialize_entry("value", &self.value)?;
        match &self.position {
            Some(p) => {
                let raw = RawValue::from_string(p.to_compact_json_text())
                    .map_err(serde::ser::Error::custom)?;
                map.serialize_entry("position", &raw)?;
            }
            None => map.serialize_entry("position", &Option::<()>::None)?,
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        Action::from_json_value(&v).map_err(D::Error::custom)
    }
}
