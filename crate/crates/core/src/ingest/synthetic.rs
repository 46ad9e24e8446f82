//! Gaussian-bump pulse trains with injectable heart-rate ramps and morphology jitter.

use preictal_nn::Rng;

use super::{EcgRecord, SeizureAnnotation, SeizureType};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEvent {
    pub onset_s: f64,
    /// Length of the window before onset in which the perturbation builds up.
    pub preictal_lead_s: f64,
    /// Heart-rate increase reached at onset (linear ramp across the lead window).
    pub hr_ramp_bpm: f64,
    /// Relative standard deviation of per-pulse amplitude and width inside the event.
    pub jitter_std: f64,
    /// Duration of the annotated seizure; the ramped rate and jitter persist through it.
    pub ictal_s: f64,
}

impl SyntheticEvent {
    pub fn new(onset_s: f64, preictal_lead_s: f64, hr_ramp_bpm: f64, jitter_std: f64) -> Self {
        Self {
            onset_s,
            preictal_lead_s,
            hr_ramp_bpm,
            jitter_std,
            ictal_s: 60.0,
        }
    }

    fn lead_start(&self) -> f64 {
        self.onset_s - self.preictal_lead_s
    }

    fn end(&self) -> f64 {
        self.onset_s + self.ictal_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub duration_s: f64,
    pub sampling_rate_hz: u32,
    pub base_hr_bpm: f64,
    /// Relative standard deviation of each beat-to-beat interval (heart-rate variability).
    pub rr_jitter_std: f64,
    pub noise_std: f64,
    /// Pulse peak height in millivolts.
    pub pulse_amp_mv: f64,
    /// Gaussian standard deviation of one pulse, in seconds.
    pub pulse_width_s: f64,
    pub events: Vec<SyntheticEvent>,
    pub rng_seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            duration_s: 60.0,
            sampling_rate_hz: 512,
            base_hr_bpm: 60.0,
            rr_jitter_std: 0.0,
            noise_std: 0.0,
            pulse_amp_mv: 1.0,
            pulse_width_s: 0.02,
            events: Vec::new(),
            rng_seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.duration_s > 0.0) || self.sampling_rate_hz == 0 {
            return bad("duration and sampling rate must be positive".into());
        }
        if !(self.base_hr_bpm > 0.0) || !(self.pulse_width_s > 0.0) || !(self.noise_std >= 0.0) {
            return bad("base heart rate and pulse width must be positive, noise nonnegative".into());
        }
        if !(0.0..0.5).contains(&self.rr_jitter_std) {
            return bad(format!("rr_jitter_std {} must lie in [0, 0.5)", self.rr_jitter_std));
        }
        let mut prev_end = 0.0;
        for (i, e) in self.events.iter().enumerate() {
            if !(e.preictal_lead_s > 0.0) || !(e.ictal_s > 0.0) || !(e.jitter_std >= 0.0) {
                return bad(format!("event {i}: lead and ictal durations must be positive"));
            }
            if e.base_plus_ramp(self.base_hr_bpm) <= 0.0 {
                return bad(format!("event {i}: ramped heart rate must stay positive"));
            }
            if e.lead_start() < prev_end {
                return bad(format!(
                    "event {i}: lead window starting at {} s overlaps the record start or the previous event",
                    e.lead_start()
                ));
            }
            if e.end() > self.duration_s {
                return bad(format!("event {i}: seizure ends after the record ({} s)", self.duration_s));
            }
            prev_end = e.end();
        }
        Ok(())
    }

    /// Instantaneous heart rate and jitter level at time `t`.
    fn state_at(&self, t: f64) -> (f64, f64) {
        for e in &self.events {
            if t >= e.lead_start() && t < e.onset_s {
                let frac = (t - e.lead_start()) / e.preictal_lead_s;
                return (self.base_hr_bpm + frac * e.hr_ramp_bpm, e.jitter_std);
            }
            if t >= e.onset_s && t < e.end() {
                return (e.base_plus_ramp(self.base_hr_bpm), e.jitter_std);
            }
        }
        (self.base_hr_bpm, 0.0)
    }
}

impl SyntheticEvent {
    fn base_plus_ramp(&self, base: f64) -> f64 {
        base + self.hr_ramp_bpm
    }
}

/// Pulse centres, amplitudes and widths; exposed for tests that measure the generated rhythm.
pub(crate) fn pulse_train(spec: &SyntheticSpec, rng: &mut Rng) -> Vec<(f64, f64, f64)> {
    let mut beats = Vec::new();
    let mut t = 0.5 * 60.0 / spec.base_hr_bpm;
    while t < spec.duration_s {
        let (hr, jitter) = spec.state_at(t);
        let (amp, width) = if jitter > 0.0 {
            let a = spec.pulse_amp_mv * (1.0 + jitter * rng.normal());
            let w = spec.pulse_width_s * (1.0 + jitter * rng.normal()).clamp(0.25, 4.0);
            (a, w)
        } else {
            (spec.pulse_amp_mv, spec.pulse_width_s)
        };
        beats.push((t, amp, width));
        let rr = if spec.rr_jitter_std > 0.0 {
            1.0 + (spec.rr_jitter_std * rng.normal()).clamp(-0.5, 0.5)
        } else {
            1.0
        };
        t += 60.0 / hr * rr;
    }
    beats
}

/// Deterministic for a fixed spec: pulses are drawn from one fork of the seed, noise from another.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<EcgRecord> {
    spec.validate()?;
    let fs = spec.sampling_rate_hz as f64;
    let n = (spec.duration_s * fs).round() as usize;
    let mut root = Rng::new(spec.rng_seed);
    let mut beat_rng = root.fork();
    let mut noise_rng = root.fork();
    let mut samples = vec![0.0; n];
    for (centre, amp, width) in pulse_train(spec, &mut beat_rng) {
        let reach = 6.0 * width;
        let lo = ((centre - reach) * fs).floor().max(0.0) as usize;
        let hi = (((centre + reach) * fs).ceil() as usize).min(n.saturating_sub(1));
        for (i, s) in samples.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let z = (i as f64 / fs - centre) / width;
            *s += amp * (-0.5 * z * z).exp();
        }
    }
    if spec.noise_std > 0.0 {
        for s in samples.iter_mut() {
            *s += spec.noise_std * noise_rng.normal();
        }
    }
    let annotations = spec
        .events
        .iter()
        .map(|e| SeizureAnnotation::new(e.onset_s, e.end(), SeizureType::Other))
        .collect::<Result<Vec<_>>>()?;
    EcgRecord::new("synthetic", spec.sampling_rate_hz, samples)?.with_annotations(annotations)
}
