//! Segment-level confusion counts with class weighting, accuracy/specificity/FPR,
//! alarm rates per inter-ictal hour and seizure-level prediction outcomes.

use serde::Serialize;

use crate::anomaly::AlarmEvent;
use crate::error::{Error, Result};
use crate::ingest::SeizureAnnotation;
use crate::preprocess::{Phase, SegmentSet};

/// Records at least this long use the hour-long pre-ictal interval.
pub const LONG_RECORD_S: f64 = 4.0 * 3600.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// Fixed pre-ictal length; `None` picks 3600 s for long records and 1800 s otherwise.
    pub preictal_len_s: Option<f64>,
    pub postictal_len_s: f64,
    /// Alarm runs separated by at most this much time merge into one event.
    pub refractory_s: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            preictal_len_s: None,
            postictal_len_s: 600.0,
            refractory_s: 60.0,
        }
    }
}

impl EvalConfig {
    pub fn preictal_len_s(&self, record_duration_s: f64) -> f64 {
        self.preictal_len_s.unwrap_or(if record_duration_s >= LONG_RECORD_S {
            3600.0
        } else {
            1800.0
        })
    }

    /// Refractory gap expressed in segments for a given hop.
    pub fn refractory_gap(&self, hop_s: f64) -> usize {
        (self.refractory_s / hop_s).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.preictal_len_s {
            if !(p > 0.0) {
                return Err(Error::Config(format!("preictal_len_s must be positive, got {p}")));
            }
        }
        if !(self.postictal_len_s >= 0.0) || !(self.refractory_s >= 0.0) {
            return Err(Error::Config("postictal_len_s and refractory_s must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Pre-ictal segments are the positive class; ictal and post-ictal segments are not counted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Weight of the positive class: negatives over positives, or 1 if either is absent.
    pub w_pos: f64,
}

impl ConfusionCounts {
    pub fn new(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let (pos, neg) = (tp + fn_, fp + tn);
        let w_pos = if pos == 0 || neg == 0 { 1.0 } else { neg as f64 / pos as f64 };
        Self { tp, fp, tn, fn_, w_pos }
    }

    pub fn weighted_tp(&self) -> f64 {
        self.w_pos * self.tp as f64
    }

    pub fn weighted_fn(&self) -> f64 {
        self.w_pos * self.fn_ as f64
    }
}

pub fn count_confusion(flags: &[bool], phases: &[Phase]) -> Result<ConfusionCounts> {
    if flags.len() != phases.len() {
        return Err(Error::Data(format!(
            "{} anomaly flags for {} phase labels",
            flags.len(),
            phases.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&f, &p) in flags.iter().zip(phases) {
        match (p, f) {
            (Phase::Preictal, true) => tp += 1,
            (Phase::Preictal, false) => fn_ += 1,
            (Phase::Interictal, true) => fp += 1,
            (Phase::Interictal, false) => tn += 1,
            _ => {}
        }
    }
    Ok(ConfusionCounts::new(tp, fp, tn, fn_))
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

/// Segment-level rates. `None` marks a ratio whose denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentMetrics {
    pub counts: ConfusionCounts,
    /// (w*TP + TN) / (w*TP + TN + FP + w*FN)
    pub accuracy: Option<f64>,
    pub accuracy_unweighted: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    /// FP / (FP + TN), unweighted.
    pub fpr_ratio: Option<f64>,
    /// Inter-ictal alarm events per inter-ictal hour.
    pub fpr_per_hour: Option<f64>,
    pub interictal_hours: f64,
    pub interictal_alarm_events: usize,
}

pub fn metrics(counts: &ConfusionCounts, inter_ictal_hours: f64, alarm_events_interictal: usize) -> SegmentMetrics {
    let (tp, fp, tn, fn_) = (counts.tp as f64, counts.fp as f64, counts.tn as f64, counts.fn_ as f64);
    let (wtp, wfn) = (counts.weighted_tp(), counts.weighted_fn());
    SegmentMetrics {
        counts: *counts,
        accuracy: ratio(wtp + tn, wtp + tn + fp + wfn),
        accuracy_unweighted: ratio(tp + tn, tp + tn + fp + fn_),
        sensitivity: ratio(tp, tp + fn_),
        specificity: ratio(tn, tn + fp),
        fpr_ratio: ratio(fp, fp + tn),
        fpr_per_hour: (inter_ictal_hours > 0.0).then(|| alarm_events_interictal as f64 / inter_ictal_hours),
        interictal_hours: inter_ictal_hours,
        interictal_alarm_events: alarm_events_interictal,
    }
}

/// Alarm event mapped onto the record timebase, `[start_s, end_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlarmSpan {
    pub start_s: f64,
    pub end_s: f64,
}

pub fn alarm_spans(events: &[AlarmEvent], set: &SegmentSet) -> Vec<AlarmSpan> {
    events
        .iter()
        .map(|e| AlarmSpan {
            start_s: set.span_s(e.start_index).0,
            end_s: set.span_s(e.end_index).1,
        })
        .collect()
}

/// Events that touch at least one inter-ictal segment and no pre-ictal or ictal one.
pub fn interictal_events(events: &[AlarmEvent], phases: &[Phase]) -> usize {
    events
        .iter()
        .filter(|e| {
            let covered = &phases[e.start_index..=e.end_index];
            covered.contains(&Phase::Interictal)
                && !covered.iter().any(|p| matches!(p, Phase::Preictal | Phase::Ictal))
        })
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeizureOutcome {
    pub onset_s: f64,
    pub predicted: bool,
    /// Minutes between the earliest overlapping alarm (clipped to the pre-ictal window) and onset.
    pub prediction_time_min: Option<f64>,
}

/// A seizure is predicted when an alarm overlaps `[onset - L, onset)`.
pub fn seizure_outcomes(alarms: &[AlarmSpan], annotations: &[SeizureAnnotation], preictal_len_s: f64) -> Vec<SeizureOutcome> {
    annotations
        .iter()
        .map(|a| {
            let window_start = a.onset_s - preictal_len_s;
            let earliest = alarms
                .iter()
                .filter(|s| s.start_s < a.onset_s && s.end_s > window_start)
                .map(|s| s.start_s.max(window_start))
                .min_by(f64::total_cmp);
            SeizureOutcome {
                onset_s: a.onset_s,
                predicted: earliest.is_some(),
                prediction_time_min: earliest.map(|t| (a.onset_s - t) / 60.0),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    #[serde(flatten)]
    pub segment: SegmentMetrics,
    pub seizures_total: usize,
    pub seizures_predicted: usize,
    pub mean_prediction_time_min: Option<f64>,
    pub seizures: Vec<SeizureOutcome>,
    pub preictal_len_s: f64,
    pub excluded_from_counts: [&'static str; 2],
}

/// Full evaluation of one scored record. `flags` and `events` refer to the segments
/// listed in `scored` (indices into `set`); segments outside it are not counted.
pub fn evaluate(
    set: &SegmentSet,
    scored: &[usize],
    flags: &[bool],
    events: &[AlarmEvent],
    annotations: &[SeizureAnnotation],
    cfg: &EvalConfig,
) -> Result<EvalResult> {
    if scored.len() != flags.len() {
        return Err(Error::Data(format!("{} flags for {} scored segments", flags.len(), scored.len())));
    }
    if let Some(&bad) = scored.iter().find(|&&i| i >= set.len()) {
        return Err(Error::Data(format!("scored segment {bad} outside a set of {}", set.len())));
    }
    let all = set.phases();
    let phases: Vec<Phase> = scored.iter().map(|&i| all[i]).collect();
    let counts = count_confusion(flags, &phases)?;
    let interictal = phases.iter().filter(|p| **p == Phase::Interictal).count();
    let hours = interictal as f64 * set.config.hop_s() / 3600.0;
    let seg = metrics(&counts, hours, interictal_events(events, &all));
    let pre = cfg.preictal_len_s(set.record_duration_s());
    let seizures = seizure_outcomes(&alarm_spans(events, set), annotations, pre);
    let times: Vec<f64> = seizures.iter().filter_map(|s| s.prediction_time_min).collect();
    Ok(EvalResult {
        segment: seg,
        seizures_total: seizures.len(),
        seizures_predicted: times.len(),
        mean_prediction_time_min: (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64),
        seizures,
        preictal_len_s: pre,
        excluded_from_counts: ["ictal", "postictal"],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    /// Number of patients for which the metric was defined.
    pub n: usize,
}

pub fn mean_std(values: &[f64]) -> Option<MeanStd> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    Some(MeanStd { mean, std, n: values.len() })
}

/// Mean and population standard deviation across patients of each headline metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub patients: usize,
    pub accuracy: Option<MeanStd>,
    pub accuracy_unweighted: Option<MeanStd>,
    pub sensitivity: Option<MeanStd>,
    pub specificity: Option<MeanStd>,
    pub fpr_ratio: Option<MeanStd>,
    pub fpr_per_hour: Option<MeanStd>,
    pub seizures_total: usize,
    pub seizures_predicted: usize,
    pub mean_prediction_time_min: Option<MeanStd>,
}

pub fn aggregate(results: &[EvalResult]) -> Aggregate {
    let pick = |f: &dyn Fn(&EvalResult) -> Option<f64>| mean_std(&results.iter().filter_map(f).collect::<Vec<_>>());
    Aggregate {
        patients: results.len(),
        accuracy: pick(&|r| r.segment.accuracy),
        accuracy_unweighted: pick(&|r| r.segment.accuracy_unweighted),
        sensitivity: pick(&|r| r.segment.sensitivity),
        specificity: pick(&|r| r.segment.specificity),
        fpr_ratio: pick(&|r| r.segment.fpr_ratio),
        fpr_per_hour: pick(&|r| r.segment.fpr_per_hour),
        seizures_total: results.iter().map(|r| r.seizures_total).sum(),
        seizures_predicted: results.iter().map(|r| r.seizures_predicted).sum(),
        mean_prediction_time_min: mean_std(
            &results
                .iter()
                .flat_map(|r| r.seizures.iter().filter_map(|s| s.prediction_time_min))
                .collect::<Vec<_>>(),
        ),
    }
}
