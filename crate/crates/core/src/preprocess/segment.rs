use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evaluation::EvalConfig;
use crate::ingest::{EcgRecord, SeizureAnnotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentationConfig {
    pub window_s: u32,
    pub overlap_s: u32,
    pub sampling_rate_hz: u32,
}

impl SegmentationConfig {
    pub fn new(window_s: u32, overlap_s: u32, sampling_rate_hz: u32) -> Result<Self> {
        let cfg = Self {
            window_s,
            overlap_s,
            sampling_rate_hz,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_s == 0 || self.sampling_rate_hz == 0 {
            return Err(Error::Config("window_s and sampling rate must be positive".into()));
        }
        if self.overlap_s >= self.window_s {
            return Err(Error::Config(format!(
                "overlap_s ({}) must be smaller than window_s ({})",
                self.overlap_s, self.window_s
            )));
        }
        Ok(())
    }

    pub fn window_samples(&self) -> usize {
        self.window_s as usize * self.sampling_rate_hz as usize
    }

    pub fn hop_samples(&self) -> usize {
        (self.window_s - self.overlap_s) as usize * self.sampling_rate_hz as usize
    }

    pub fn hop_s(&self) -> f64 {
        (self.window_s - self.overlap_s) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Interictal,
    Preictal,
    Ictal,
    Postictal,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Interictal => "interictal",
            Phase::Preictal => "preictal",
            Phase::Ictal => "ictal",
            Phase::Postictal => "postictal",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Phase::Interictal => 0,
            Phase::Preictal => 1,
            Phase::Ictal => 2,
            Phase::Postictal => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        [Phase::Interictal, Phase::Preictal, Phase::Ictal, Phase::Postictal]
            .get(code as usize)
            .copied()
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "interictal" => Ok(Phase::Interictal),
            "preictal" => Ok(Phase::Preictal),
            "ictal" => Ok(Phase::Ictal),
            "postictal" => Ok(Phase::Postictal),
            other => Err(format!("unknown phase {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub index: usize,
    pub start_sample: usize,
    pub samples: Vec<f64>,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSet {
    pub config: SegmentationConfig,
    /// Length of the source record in samples (the tail past the last window included).
    pub record_len: usize,
    pub segments: Vec<Segment>,
}

impl SegmentSet {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn record_duration_s(&self) -> f64 {
        self.record_len as f64 / self.config.sampling_rate_hz as f64
    }

    /// Half-open time span `[start, end)` of segment `i` in seconds.
    pub fn span_s(&self, i: usize) -> (f64, f64) {
        let fs = self.config.sampling_rate_hz as f64;
        let start = self.segments[i].start_sample as f64 / fs;
        (start, start + self.config.window_s as f64)
    }

    pub fn phases(&self) -> Vec<Phase> {
        self.segments.iter().map(|s| s.phase).collect()
    }
}

/// Cuts the record into windows of `window_s` every `hop` seconds; a trailing partial
/// window is dropped. All segments start as inter-ictal.
pub fn segment(record: &EcgRecord, cfg: &SegmentationConfig) -> Result<SegmentSet> {
    cfg.validate()?;
    if cfg.sampling_rate_hz != record.sampling_rate_hz() {
        return Err(Error::Config(format!(
            "segmentation configured for {} Hz but record is sampled at {} Hz",
            cfg.sampling_rate_hz,
            record.sampling_rate_hz()
        )));
    }
    let (w, hop, n) = (cfg.window_samples(), cfg.hop_samples(), record.len());
    if n < w {
        return Err(Error::Record(format!(
            "record has {n} samples, fewer than one {w}-sample window"
        )));
    }
    let count = 1 + (n - w) / hop;
    let segments = (0..count)
        .map(|i| Segment {
            index: i,
            start_sample: i * hop,
            samples: record.samples()[i * hop..i * hop + w].to_vec(),
            phase: Phase::Interictal,
        })
        .collect();
    Ok(SegmentSet {
        config: *cfg,
        record_len: n,
        segments,
    })
}

/// Phase of a half-open span `[start, end)`. Ictal spans are `[onset, offset)`,
/// pre-ictal `[onset - L, onset)`, post-ictal `[offset, offset + P)`; ictal beats
/// pre-ictal beats post-ictal.
pub fn phase_of(start: f64, end: f64, annotations: &[SeizureAnnotation], preictal_len_s: f64, postictal_len_s: f64) -> Phase {
    let overlaps = |lo: f64, hi: f64| start < hi && end > lo;
    if annotations.iter().any(|a| overlaps(a.onset_s, a.offset_s)) {
        Phase::Ictal
    } else if annotations.iter().any(|a| overlaps(a.onset_s - preictal_len_s, a.onset_s)) {
        Phase::Preictal
    } else if annotations.iter().any(|a| overlaps(a.offset_s, a.offset_s + postictal_len_s)) {
        Phase::Postictal
    } else {
        Phase::Interictal
    }
}

pub fn label_phases(mut set: SegmentSet, annotations: &[SeizureAnnotation], eval_cfg: &EvalConfig) -> SegmentSet {
    let pre = eval_cfg.preictal_len_s(set.record_duration_s());
    let post = eval_cfg.postictal_len_s;
    for i in 0..set.len() {
        let (start, end) = set.span_s(i);
        set.segments[i].phase = phase_of(start, end, annotations, pre, post);
    }
    set
}
