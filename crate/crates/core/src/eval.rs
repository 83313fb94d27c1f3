//! Offline metrics: point-in-box grounding and per-step exact action match.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::action::{PositionRule, ValueRule};
use crate::types::{ActionKind, BBox, Point, Position, ThoughtAction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub predicted: ThoughtAction,
    pub gold_action_kind: ActionKind,
    #[serde(default)]
    pub gold_value: Option<String>,
    #[serde(default)]
    pub gold_bbox: Option<BBox>,
    #[serde(default)]
    pub gold_point_pair_bboxes: Option<(BBox, BBox)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalRecordError {
    #[error("gold {0} needs a value")]
    MissingValue(ActionKind),
    #[error("gold {0} needs a bounding box")]
    MissingBBox(ActionKind),
    #[error("gold {0} needs two bounding boxes")]
    MissingBBoxPair(ActionKind),
}

impl EvalRecord {
    pub fn validate(&self) -> Result<(), EvalRecordError> {
        let k = self.gold_action_kind;
        if k.value_rule() == ValueRule::Required && self.gold_value.is_none() {
            return Err(EvalRecordError::MissingValue(k));
        }
        match k.position_rule() {
            PositionRule::Point if self.gold_bbox.is_none() => Err(EvalRecordError::MissingBBox(k)),
            PositionRule::Pair if self.gold_point_pair_bboxes.is_none() => {
                Err(EvalRecordError::MissingBBoxPair(k))
            }
            _ => Ok(()),
        }
    }

    fn has_point_parameter(&self) -> bool {
        self.gold_bbox.is_some() || self.gold_point_pair_bboxes.is_some()
    }
}

/// Closed-interval membership on both axes.
pub fn grounding_correct(pred: Point, gold: &BBox) -> bool {
    gold.contains(pred)
}

/// Whether the first predicted action's position lands in the gold box(es),
/// regardless of action kind. `None` for records without point parameters.
pub fn point_correct(rec: &EvalRecord) -> Option<bool> {
    if !rec.has_point_parameter() {
        return None;
    }
    let pos = rec.predicted.actions.first().and_then(|a| a.position.as_ref());
    Some(match (pos, &rec.gold_bbox, &rec.gold_point_pair_bboxes) {
        (Some(Position::Point(p)), Some(b), _) => grounding_correct(*p, b),
        (Some(Position::PointPair(a, b)), _, Some((ga, gb))) => grounding_correct(*a, ga) && grounding_correct(*b, gb),
        _ => false,
    })
}

pub fn kind_correct(rec: &EvalRecord) -> bool {
    rec.predicted.first_kind() == Some(rec.gold_action_kind)
}

/// Kind match, then exact (trimmed, case-sensitive) value match, then every
/// point parameter inside its gold box. Only the first predicted action counts.
pub fn step_correct(rec: &EvalRecord) -> bool {
    if rec.validate().is_err() || !kind_correct(rec) {
        return false;
    }
    let pred = &rec.predicted.actions[0];
    if let Some(gold) = &rec.gold_value {
        match &pred.value {
            Some(v) if v.trim() == gold.trim() => {}
            _ => return false,
        }
    }
    point_correct(rec).unwrap_or(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalDiagnostics {
    /// Records whose prediction had more than one action.
    pub records_with_extra_actions: u64,
    /// Predicted actions beyond the first, which scoring ignores.
    pub ignored_actions: u64,
    /// Records failing gold well-formedness (scored as incorrect).
    pub invalid_gold: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub count: u64,
    pub step_accuracy: Option<f64>,
    pub element_accuracy: Option<f64>,
    pub element_count: u64,
    pub action_kind_accuracy: Option<f64>,
    pub diagnostics: EvalDiagnostics,
}

fn mean(hits: u64, n: u64) -> Option<f64> {
    (n > 0).then(|| hits as f64 / n as f64)
}

pub fn aggregate(records: &[EvalRecord]) -> EvalReport {
    let mut step = 0;
    let mut kind = 0;
    let mut elem = 0;
    let mut elem_n = 0;
    let mut diag = EvalDiagnostics::default();
    for r in records {
        step += step_correct(r) as u64;
        kind += kind_correct(r) as u64;
        if let Some(ok) = point_correct(r) {
            elem_n += 1;
            elem += ok as u64;
        }
        let extra = r.predicted.actions.len().saturating_sub(1) as u64;
        if extra > 0 {
            diag.records_with_extra_actions += 1;
            diag.ignored_actions += extra;
        }
        diag.invalid_gold += r.validate().is_err() as u64;
    }
    let n = records.len() as u64;
    EvalReport {
        count: n,
        step_accuracy: mean(step, n),
        element_accuracy: mean(elem, elem_n),
        element_count: elem_n,
        action_kind_accuracy: mean(kind, n),
        diagnostics: diag,
    }
}
