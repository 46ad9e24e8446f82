//! Mexican-hat continuous wavelet transform over integer scales via FFT convolution.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub const SCALES: usize = 128;
pub const TIME_STRIDE: usize = 4;
/// Kernel support in units of the scale.
pub const SUPPORT: f64 = 8.0;

/// `(1 - t^2) exp(-t^2 / 2)`
pub fn mexh(t: f64) -> f64 {
    let t2 = t * t;
    (1.0 - t2) * (-0.5 * t2).exp()
}

/// Samples `psi(m / a) / sqrt(a)` for `|m| <= half_width`, index `half_width` is `m = 0`.
pub fn kernel(scale: f64, half_width: usize) -> Vec<f64> {
    let norm = 1.0 / scale.sqrt();
    (0..=2 * half_width)
        .map(|i| norm * mexh((i as f64 - half_width as f64) / scale))
        .collect()
}

/// Energies `E[a][b] = C(a, b)^2`, scale-major, `b` strided by [`TIME_STRIDE`].
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    pub scales: usize,
    pub times: usize,
    pub values: Vec<f64>,
}

impl Scalogram {
    pub fn at(&self, scale_index: usize, time_index: usize) -> f64 {
        self.values[scale_index * self.times + time_index]
    }

    /// Time-major copy: `times` rows of `scales` values.
    pub fn time_major(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.values.len()];
        for a in 0..self.scales {
            for b in 0..self.times {
                out[b * self.scales + a] = self.values[a * self.times + b];
            }
        }
        out
    }
}

/// Precomputed kernel spectra for one segment length.
pub struct CwtPlan {
    n: usize,
    fft_len: usize,
    half_widths: Vec<usize>,
    spectra: Vec<Vec<Complex64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CwtPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CwtPlan").field("n", &self.n).field("fft_len", &self.fft_len).finish()
    }
}

impl CwtPlan {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "empty segment");
        let fft_len = (3 * n).saturating_sub(2).max(1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let mut half_widths = Vec::with_capacity(SCALES);
        let mut spectra = Vec::with_capacity(SCALES);
        for a in 1..=SCALES {
            let hw = ((SUPPORT * a as f64) as usize).min(n - 1);
            let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
            for (i, v) in kernel(a as f64, hw).into_iter().enumerate() {
                buf[i] = Complex64::new(v, 0.0);
            }
            forward.process(&mut buf);
            half_widths.push(hw);
            spectra.push(buf);
        }
        Self {
            n,
            fft_len,
            half_widths,
            spectra,
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn times(&self) -> usize {
        self.n.div_ceil(TIME_STRIDE)
    }

    /// Two real convolutions share one complex inverse transform (real part, imaginary part).
    pub fn scalogram(&self, x: &[f64]) -> Scalogram {
        assert_eq!(x.len(), self.n, "plan built for a different segment length");
        let mut spec = vec![Complex64::new(0.0, 0.0); self.fft_len];
        for (s, &v) in spec.iter_mut().zip(x) {
            s.re = v;
        }
        self.forward.process(&mut spec);
        let times = self.times();
        let scale = 1.0 / self.fft_len as f64;
        let mut values = vec![0.0; SCALES * times];
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_len];
        let i = Complex64::new(0.0, 1.0);
        for pair in (0..SCALES).step_by(2) {
            let second = pair + 1 < SCALES;
            for (k, b) in buf.iter_mut().enumerate() {
                let mut v = spec[k] * self.spectra[pair][k];
                if second {
                    v += i * spec[k] * self.spectra[pair + 1][k];
                }
                *b = v;
            }
            self.inverse.process(&mut buf);
            for (off, a) in [(0, pair), (1, pair + 1)] {
                if off == 1 && !second {
                    continue;
                }
                let hw = self.half_widths[a];
                let row = &mut values[a * times..(a + 1) * times];
                for (t, r) in row.iter_mut().enumerate() {
                    let z = buf[t * TIME_STRIDE + hw];
                    let c = if off == 0 { z.re } else { z.im } * scale;
                    *r = c * c;
                }
            }
        }
        Scalogram {
            scales: SCALES,
            times,
            values,
        }
    }
}

pub fn cwt_scalogram(x: &[f64]) -> Scalogram {
    CwtPlan::new(x.len()).scalogram(x)
}
