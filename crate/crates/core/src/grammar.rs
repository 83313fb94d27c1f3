//! The `Thought: ... / Action: ...` text format spoken by the GUI agent.
//!
//! ```text
//! Thought: The font menu is in the Home tab.
//! Action: {"action": "CLICK", "value": "None", "position": [0.3200, 0.1100]}
//! ```
//!
//! The action payload is one JSON object or a JSON array of objects.

use serde_json::Value;
use thiserror::Error;

use crate::types::{validate_action, Action, ThoughtAction};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{reason}")]
pub struct ParseFailure {
    pub reason: String,
    pub raw: String,
}

/// Render the action payload: a single object, or an array for several.
pub fn serialize_actions(actions: &[Action]) -> String {
    match actions {
        [one] => one.to_prompt_json(),
        many => format!(
            "[{}]",
            many.iter()
                .map(Action::to_prompt_json)
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

pub fn serialize_thought_action(ta: &ThoughtAction) -> String {
    format!("Thought: {}\nAction: {}", ta.thought, serialize_actions(&ta.actions))
}

fn label_at(line: &str, label: &str) -> Option<usize> {
    let trimmed = line.trim_start();
    let offset = line.len() - trimmed.len();
    let head = trimmed.get(..label.len())?;
    head.eq_ignore_ascii_case(label).then_some(offset + label.len())
}

/// Byte offset just past the first `label` that starts a line.
fn find_line_label(text: &str, label: &str, from: usize) -> Option<(usize, usize)> {
    let mut pos = 0;
    for line in text.split_inclusive('\n') {
        if pos >= from {
            if let Some(end) = label_at(line, label) {
                let start = pos + (line.len() - line.trim_start().len());
                return Some((start, pos + end));
            }
        }
        pos += line.len();
    }
    None
}

fn find_inline_label(text: &str, label: &str, from: usize) -> Option<(usize, usize)> {
    let lower = text.to_ascii_lowercase();
    let needle = label.to_ascii_lowercase();
    lower
        .get(from..)?
        .find(&needle)
        .map(|i| (from + i, from + i + label.len()))
}

/// Replace bare `None` tokens outside string literals with `null`.
fn none_to_null(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let chars: Vec<char> = src.chars().collect();
    let mut in_str = false;
    let mut escaped = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if in_str {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_str = false;
            }
            i += 1;
            continue;
        }
        if c == '"' {
            in_str = true;
            out.push(c);
            i += 1;
            continue;
        }
        let word_boundary = |j: usize| j >= chars.len() || !chars[j].is_alphanumeric();
        let prev_ok = i == 0 || !chars[i - 1].is_alphanumeric();
        if prev_ok
            && chars[i..].starts_with(&['N', 'o', 'n', 'e'])
            && word_boundary(i + 4)
        {
            out.push_str("null");
            i += 4;
            continue;
        }
        out.push(c);
        i += 1;
    }
    out
}

fn first_json_value(s: &str) -> Option<Value> {
    let start = s.find(['{', '['])?;
    let mut it = serde_json::Deserializer::from_str(&s[start..]).into_iter::<Value>();
    it.next()?.ok()
}

/// Parse raw agent output into a validated [`ThoughtAction`].
pub fn parse_agent_output(raw: &str) -> Result<ThoughtAction, ParseFailure> {
    let fail = |reason: String| ParseFailure {
        reason,
        raw: raw.to_string(),
    };
    let text = raw.replace("\r\n", "\n");

    let thought_label = find_line_label(&text, "Thought:", 0);
    let search_from = thought_label.map_or(0, |(_, end)| end);
    let (action_start, action_end) = find_line_label(&text, "Action:", search_from)
        .or_else(|| find_inline_label(&text, "Action:", search_from))
        .ok_or_else(|| fail("no Action: section".into()))?;

    let thought = match thought_label {
        Some((_, end)) => text[end..action_start].trim().to_string(),
        None => String::new(),
    };

    let payload = text[action_end..].trim();
    let value = first_json_value(payload)
        .or_else(|| first_json_value(&none_to_null(payload)))
        .ok_or_else(|| fail(format!("action payload is not JSON: {payload}")))?;

    let items: Vec<&Value> = match &value {
        Value::Array(a) => a.iter().collect(),
        obj @ Value::Object(_) => vec![obj],
        other => return Err(fail(format!("action payload must be an object or array, got {other}"))),
    };
    if items.is_empty() {
        return Err(fail("empty action array".into()));
    }

    let mut actions = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let a = Action::from_json_value(item).map_err(|e| fail(format!("action {i}: {e}")))?;
        validate_action(&a).map_err(|e| fail(format!("action {i}: {e}")))?;
        actions.push(a);
    }
    Ok(ThoughtAction { thought, actions })
}
