//! Butterworth low-pass as cascaded second-order sections (bilinear transform with
//! frequency prewarping), run once or forward-backward.

use crate::error::{Error, Result};
use crate::ingest::EcgRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub cutoff_hz: f64,
    pub order: usize,
    pub zero_phase: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            cutoff_hz: 40.0,
            order: 4,
            zero_phase: true,
        }
    }
}

/// Normalized biquad `b0 + b1 z^-1 + b2 z^-2 / 1 + a1 z^-1 + a2 z^-2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// Transposed direct form II over `x` in place, starting from the steady state for `x[0]`.
    fn run(&self, x: &mut [f64]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let Some(&c) = x.first() else { return };
        let mut z2 = (b2 - a2) * c;
        let mut z1 = (b1 + b2 - a1 - a2) * c;
        for v in x.iter_mut() {
            let xin = *v;
            let y = b0 * xin + z1;
            z1 = b1 * xin - a1 * y + z2;
            z2 = b2 * xin - a2 * y;
            *v = y;
        }
    }

    /// Complex response at normalized angular frequency `w` (radians per sample).
    fn response(&self, w: f64) -> (f64, f64) {
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (self.b[0] + self.b[1] * c1 + self.b[2] * c2, self.b[1] * s1 + self.b[2] * s2);
        let den = (1.0 + self.a[0] * c1 + self.a[1] * c2, self.a[0] * s1 + self.a[1] * s2);
        let d = den.0 * den.0 + den.1 * den.1;
        ((num.0 * den.0 + num.1 * den.1) / d, (num.1 * den.0 - num.0 * den.1) / d)
    }
}

/// Second-order sections of a digital Butterworth low-pass; an odd order ends with a
/// first-order section stored as a biquad with zero second taps.
pub fn butterworth_sections(cutoff_hz: f64, order: usize, fs: f64) -> Result<Vec<Biquad>> {
    if order == 0 {
        return Err(Error::Config("filter order must be at least 1".into()));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0) {
        return Err(Error::Config(format!(
            "cutoff_hz {cutoff_hz} must lie in (0, {}) for sampling rate {fs} Hz",
            fs / 2.0
        )));
    }
    let k = (std::f64::consts::PI * cutoff_hz / fs).tan();
    let k2 = k * k;
    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for i in 1..=order / 2 {
        let damping = 2.0 * (std::f64::consts::PI * (2 * i - 1) as f64 / (2 * order) as f64).sin();
        let a0 = 1.0 + damping * k + k2;
        sections.push(Biquad {
            b: [k2 / a0, 2.0 * k2 / a0, k2 / a0],
            a: [(2.0 * k2 - 2.0) / a0, (1.0 - damping * k + k2) / a0],
        });
    }
    if order % 2 == 1 {
        let a0 = 1.0 + k;
        sections.push(Biquad {
            b: [k / a0, k / a0, 0.0],
            a: [(k - 1.0) / a0, 0.0],
        });
    }
    Ok(sections)
}

/// Magnitude response of the cascade at `freq_hz` for a single pass.
pub fn magnitude_response(sections: &[Biquad], freq_hz: f64, fs: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * freq_hz / fs;
    sections
        .iter()
        .map(|s| {
            let (re, im) = s.response(w);
            (re * re + im * im).sqrt()
        })
        .product()
}

fn cascade(sections: &[Biquad], x: &mut [f64]) {
    for s in sections {
        s.run(x);
    }
}

fn forward_backward(sections: &[Biquad], x: &mut [f64]) {
    cascade(sections, x);
    x.reverse();
    cascade(sections, x);
    x.reverse();
}

/// Filters `x`. Zero-phase mode pads by odd reflection, then averages the
/// forward-backward and backward-forward passes so the result commutes exactly
/// with time reversal.
pub fn filter_signal(x: &[f64], sections: &[Biquad], zero_phase: bool) -> Vec<f64> {
    if !zero_phase {
        let mut y = x.to_vec();
        cascade(sections, &mut y);
        return y;
    }
    let n = x.len();
    if n < 2 {
        return x.to_vec();
    }
    let pad = (3 * (2 * sections.len() + 1)).min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let mut fb = ext.clone();
    forward_backward(sections, &mut fb);
    let mut bf = ext;
    bf.reverse();
    forward_backward(sections, &mut bf);
    bf.reverse();
    fb[pad..pad + n]
        .iter()
        .zip(&bf[pad..pad + n])
        .map(|(a, b)| 0.5 * (a + b))
        .collect()
}

pub fn lowpass(record: &EcgRecord, cfg: &FilterConfig) -> Result<EcgRecord> {
    let fs = record.sampling_rate_hz() as f64;
    let sections = butterworth_sections(cfg.cutoff_hz, cfg.order, fs)?;
    record.with_samples(filter_signal(record.samples(), &sections, cfg.zero_phase))
}
