//! Short-time Fourier spectrogram with centred reflect padding.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub const WINDOW: usize = 512;
pub const HOP: usize = 128;
pub const BINS: usize = WINDOW / 2 + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Hann,
    /// All-ones window; used to make spectral identities exact in tests.
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self) -> Vec<f64> {
        match self {
            WindowKind::Hann => (0..WINDOW)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / WINDOW as f64).cos())
                .collect(),
            WindowKind::Rectangular => vec![1.0; WINDOW],
        }
    }
}

/// `S[t][f] = |X(t, f)|^2`, frame-major, one-sided.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: usize,
    pub bins: usize,
    pub values: Vec<f64>,
}

impl Spectrogram {
    pub fn at(&self, frame: usize, bin: usize) -> f64 {
        self.values[frame * self.bins + bin]
    }
}

pub fn frame_count(n: usize) -> usize {
    1 + n / HOP
}

/// Index into `x` for padded position `p` under mirror (reflect, no edge repeat) padding.
pub fn reflect_index(p: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut i = p.rem_euclid(period);
    if i >= n as isize {
        i = period - i;
    }
    i as usize
}

/// Framed, windowed segment: frame `t` covers padded samples `[t*HOP, t*HOP + WINDOW)`.
pub fn frames(x: &[f64], window: WindowKind) -> Vec<Vec<f64>> {
    let w = window.coefficients();
    let n = x.len();
    (0..frame_count(n))
        .map(|t| {
            (0..WINDOW)
                .map(|j| {
                    let p = (t * HOP + j) as isize - (WINDOW / 2) as isize;
                    w[j] * x[reflect_index(p, n)]
                })
                .collect()
        })
        .collect()
}

pub struct StftPlan {
    fft: Arc<dyn Fft<f64>>,
    window: WindowKind,
}

impl StftPlan {
    pub fn new(window: WindowKind) -> Self {
        Self {
            fft: FftPlanner::new().plan_fft_forward(WINDOW),
            window,
        }
    }

    pub fn spectrogram(&self, x: &[f64]) -> Spectrogram {
        assert!(!x.is_empty(), "empty segment");
        let fr = frames(x, self.window);
        let mut values = Vec::with_capacity(fr.len() * BINS);
        let mut buf = vec![Complex64::new(0.0, 0.0); WINDOW];
        for f in &fr {
            for (b, &v) in buf.iter_mut().zip(f) {
                *b = Complex64::new(v, 0.0);
            }
            self.fft.process(&mut buf);
            values.extend(buf[..BINS].iter().map(|c| c.norm_sqr()));
        }
        Spectrogram {
            frames: fr.len(),
            bins: BINS,
            values,
        }
    }
}

pub fn stft_spectrogram(x: &[f64], window: WindowKind) -> Spectrogram {
    StftPlan::new(window).spectrogram(x)
}
