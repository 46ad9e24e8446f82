use crate::error::{Error, Result};
use crate::preprocess::{Phase, SegmentSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselinePlan {
    /// Upper bound on the baseline length in seconds.
    pub cap_s: f64,
    /// Upper bound as a fraction of the record duration.
    pub fraction: f64,
    /// Shorter baselines are rejected.
    pub min_s: f64,
}

impl Default for BaselinePlan {
    fn default() -> Self {
        Self {
            cap_s: 1800.0,
            fraction: 0.2,
            min_s: 60.0,
        }
    }
}

impl BaselinePlan {
    pub fn limit_s(&self, record_duration_s: f64) -> f64 {
        self.cap_s.min(self.fraction * record_duration_s)
    }
}

/// Indices of the training baseline and of every remaining segment.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub limit_s: f64,
}

/// The baseline is the initial run of inter-ictal segments that end within
/// `min(cap_s, fraction * duration)`; every other segment is held out.
pub fn select_baseline(set: &SegmentSet, plan: &BaselinePlan) -> Result<BaselineSplit> {
    let limit = plan.limit_s(set.record_duration_s());
    let mut train = Vec::new();
    for (i, s) in set.segments.iter().enumerate() {
        if s.phase != Phase::Interictal || set.span_s(i).1 > limit + 1e-9 {
            break;
        }
        train.push(i);
    }
    let covered = train.last().map_or(0.0, |&i| set.span_s(i).1);
    if train.len() < 2 || covered + 1e-9 < plan.min_s {
        let first_non_inter = set.segments.iter().position(|s| s.phase != Phase::Interictal);
        return Err(Error::BaselineUnavailable(match first_non_inter {
            Some(i) if set.span_s(i).0 < plan.min_s => format!(
                "segment {i} at {} s is already {} (need {} s of inter-ictal signal first)",
                set.span_s(i).0,
                set.segments[i].phase,
                plan.min_s
            ),
            _ => format!(
                "only {covered} s of baseline fits under the {limit} s limit (minimum {} s, at least 2 segments)",
                plan.min_s
            ),
        }));
    }
    let test = (train.len()..set.len()).collect();
    Ok(BaselineSplit {
        train,
        test,
        limit_s: limit,
    })
}
