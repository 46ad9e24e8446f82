//! Moving-average smoothing of reconstruction errors, the `mu + k*sigma` threshold,
//! per-segment detection and merged alarm events.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    errors: Vec<f64>,
    indices: Vec<usize>,
    /// Window used when this series was smoothed; `None` for raw errors.
    smoothing_w: Option<usize>,
}

impl ErrorSeries {
    pub fn new(errors: Vec<f64>, indices: Vec<usize>) -> Result<Self> {
        if errors.len() != indices.len() {
            return Err(Error::Data(format!(
                "{} errors for {} segment indices",
                errors.len(),
                indices.len()
            )));
        }
        if let Some(e) = errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(Error::Data(format!("reconstruction error {e} is negative or non-finite")));
        }
        if indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Data("segment indices must be strictly increasing".into()));
        }
        Ok(Self {
            errors,
            indices,
            smoothing_w: None,
        })
    }

    /// Raw series indexed `0..len`.
    pub fn from_errors(errors: Vec<f64>) -> Result<Self> {
        let indices = (0..errors.len()).collect();
        Self::new(errors, indices)
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn smoothing_w(&self) -> Option<usize> {
        self.smoothing_w
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    /// Consecutive sub-series `[from, to)` keeping indices and smoothing state.
    pub fn slice(&self, from: usize, to: usize) -> Self {
        Self {
            errors: self.errors[from..to].to_vec(),
            indices: self.indices[from..to].to_vec(),
            smoothing_w: self.smoothing_w,
        }
    }
}

/// Centred moving average of odd width `w`; near the ends the window is clipped and
/// the mean is taken over the points actually present.
pub fn smooth(series: &ErrorSeries, w: usize) -> Result<ErrorSeries> {
    if series.is_empty() {
        return Err(Error::Data("cannot smooth an empty error series".into()));
    }
    if w == 0 || w % 2 == 0 {
        return Err(Error::Config(format!("smoothing window must be odd and positive, got {w}")));
    }
    if let Some(prev) = series.smoothing_w {
        return Err(Error::Data(format!("series is already smoothed (w = {prev})")));
    }
    let e = &series.errors;
    let n = e.len();
    let half = w / 2;
    let errors = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            e[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    Ok(ErrorSeries {
        errors,
        indices: series.indices.clone(),
        smoothing_w: Some(w),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Threshold {
    pub mu: f64,
    pub sigma: f64,
    pub k: f64,
    pub tau: f64,
}

impl Threshold {
    pub fn new(mu: f64, sigma: f64, k: f64) -> Self {
        Self {
            mu,
            sigma,
            k,
            tau: mu + k * sigma,
        }
    }
}

/// Population mean and standard deviation of smoothed training errors.
pub fn fit_threshold(train_smoothed: &ErrorSeries, k: f64) -> Result<Threshold> {
    if train_smoothed.is_empty() {
        return Err(Error::Data("cannot fit a threshold on an empty series".into()));
    }
    if train_smoothed.smoothing_w.is_none() {
        return Err(Error::Data(
            "threshold must be fit on smoothed errors (use w = 1 for no smoothing)".into(),
        ));
    }
    if !k.is_finite() {
        return Err(Error::Config(format!("k = {k} is not finite")));
    }
    let e = &train_smoothed.errors;
    let n = e.len() as f64;
    // Offsetting by the first value keeps constant series exact.
    let mu = e[0] + e.iter().map(|v| v - e[0]).sum::<f64>() / n;
    let sigma = (e.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n).sqrt();
    Ok(Threshold::new(mu, sigma, k))
}

/// Inclusive range of segment indices covered by one alarm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct AlarmEvent {
    pub start_index: usize,
    pub end_index: usize,
    /// Number of above-threshold segments inside the range.
    pub anomalous: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub flags: Vec<bool>,
    pub events: Vec<AlarmEvent>,
}

impl Detection {
    pub fn anomaly_count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }
}

/// Flags segments whose smoothed error is strictly above `tau`. Runs of flagged
/// segments whose index gap (unflagged segments in between) is at most
/// `refractory_gap` form one event.
pub fn detect(series: &ErrorSeries, threshold: &Threshold, refractory_gap: usize) -> Result<Detection> {
    if series.smoothing_w.is_none() {
        return Err(Error::Data("detection expects a smoothed series (use w = 1 for none)".into()));
    }
    let flags: Vec<bool> = series.errors.iter().map(|&e| e > threshold.tau).collect();
    let mut events: Vec<AlarmEvent> = Vec::new();
    for (pos, _) in flags.iter().enumerate().filter(|(_, f)| **f) {
        let idx = series.indices[pos];
        match events.last_mut() {
            Some(ev) if idx - ev.end_index - 1 <= refractory_gap => {
                ev.end_index = idx;
                ev.anomalous += 1;
            }
            _ => events.push(AlarmEvent {
                start_index: idx,
                end_index: idx,
                anomalous: 1,
            }),
        }
    }
    Ok(Detection { flags, events })
}

/// `segment_index,raw_error,smoothed_error,anomaly_flag` rows.
pub fn errors_csv(raw: &ErrorSeries, smoothed: &ErrorSeries, flags: &[bool]) -> Result<String> {
    if raw.len() != smoothed.len() || raw.len() != flags.len() || raw.indices != smoothed.indices {
        return Err(Error::Data("raw, smoothed and flag series are not aligned".into()));
    }
    let mut out = String::from("segment_index,raw_error,smoothed_error,anomaly_flag\n");
    for i in 0..raw.len() {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{}\n",
            raw.indices[i], raw.errors[i], smoothed.errors[i], flags[i] as u8
        ));
    }
    Ok(out)
}
