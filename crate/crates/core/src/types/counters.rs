use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Funnel stages in their fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Crawled,
    AfterDedup,
    AfterContentFilter,
    AfterTrajectoryFilter,
}

impl Stage {
    pub const ORDER: [Stage; 4] = [
        Stage::Crawled,
        Stage::AfterDedup,
        Stage::AfterContentFilter,
        Stage::AfterTrajectoryFilter,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Crawled => "crawled",
            Stage::AfterDedup => "after_dedup",
            Stage::AfterContentFilter => "after_content_filter",
            Stage::AfterTrajectoryFilter => "after_trajectory_filter",
        }
    }

    fn previous(self) -> Option<Stage> {
        let i = Stage::ORDER.iter().position(|s| *s == self)?;
        i.checked_sub(1).map(|j| Stage::ORDER[j])
    }
}

/// Step-length histogram bucket label: `"1"` .. `"8"`, then `"9+"`.
pub fn step_bucket(len: usize) -> String {
    if len >= 9 {
        "9+".to_string()
    } else {
        len.to_string()
    }
}

pub const STEP_BUCKETS: [&str; 9] = ["1", "2", "3", "4", "5", "6", "7", "8", "9+"];

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PipelineCounters {
    pub crawled: u64,
    pub after_dedup: u64,
    pub after_content_filter: u64,
    pub after_trajectory_filter: u64,
    /// Trajectory step-length histogram keyed by [`step_bucket`].
    pub steps: BTreeMap<String, u64>,
    pub action_kinds: BTreeMap<String, u64>,
    pub platforms: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CounterError {
    #[error("{stage} count {count} exceeds {previous} count {previous_count}")]
    MonotonicityViolation {
        stage: &'static str,
        count: u64,
        previous: &'static str,
        previous_count: u64,
    },
}

impl PipelineCounters {
    pub fn get(&self, stage: Stage) -> u64 {
        match stage {
            Stage::Crawled => self.crawled,
            Stage::AfterDedup => self.after_dedup,
            Stage::AfterContentFilter => self.after_content_filter,
            Stage::AfterTrajectoryFilter => self.after_trajectory_filter,
        }
    }

    fn slot(&mut self, stage: Stage) -> &mut u64 {
        match stage {
            Stage::Crawled => &mut self.crawled,
            Stage::AfterDedup => &mut self.after_dedup,
            Stage::AfterContentFilter => &mut self.after_content_filter,
            Stage::AfterTrajectoryFilter => &mut self.after_trajectory_filter,
        }
    }

    /// Add `delta` to `stage`, rejecting any result that would exceed the
    /// preceding stage. Earlier stages must be recorded first.
    pub fn update(&self, stage: Stage, delta: u64) -> Result<PipelineCounters, CounterError> {
        let mut next = self.clone();
        let count = next.get(stage) + delta;
        if let Some(prev) = stage.previous() {
            let previous_count = next.get(prev);
            if count > previous_count {
                return Err(CounterError::MonotonicityViolation {
                    stage: stage.as_str(),
                    count,
                    previous: prev.as_str(),
                    previous_count,
                });
            }
        }
        *next.slot(stage) = count;
        Ok(next)
    }

    pub fn check_monotone(&self) -> Result<(), CounterError> {
        for w in Stage::ORDER.windows(2) {
            let (prev, cur) = (w[0], w[1]);
            if self.get(cur) > self.get(prev) {
                return Err(CounterError::MonotonicityViolation {
                    stage: cur.as_str(),
                    count: self.get(cur),
                    previous: prev.as_str(),
                    previous_count: self.get(prev),
                });
            }
        }
        Ok(())
    }

    /// `after_trajectory_filter / crawled`, or `None` when nothing was crawled.
    pub fn retention(&self) -> Option<f64> {
        (self.crawled > 0).then(|| self.after_trajectory_filter as f64 / self.crawled as f64)
    }

    /// Field-wise sum; commutative and associative.
    pub fn merge(&self, other: &PipelineCounters) -> PipelineCounters {
        fn add(a: &BTreeMap<String, u64>, b: &BTreeMap<String, u64>) -> BTreeMap<String, u64> {
            let mut out = a.clone();
            for (k, v) in b {
                *out.entry(k.clone()).or_default() += v;
            }
            out
        }
        PipelineCounters {
            crawled: self.crawled + other.crawled,
            after_dedup: self.after_dedup + other.after_dedup,
            after_content_filter: self.after_content_filter + other.after_content_filter,
            after_trajectory_filter: self.after_trajectory_filter + other.after_trajectory_filter,
            steps: add(&self.steps, &other.steps),
            action_kinds: add(&self.action_kinds, &other.action_kinds),
            platforms: add(&self.platforms, &other.platforms),
        }
    }
}

/// `0.33` renders as `"33.0%"`.
pub fn format_percent(fraction: f64) -> String {
    format!("{:.1}%", fraction * 100.0)
}
