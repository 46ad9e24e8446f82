//! Periodized multi-level discrete wavelet transform.

use super::WaveletFilterBank;
use crate::error::{Error, Result};

/// Approximation at the deepest level followed by details from deepest to finest.
#[derive(Debug, Clone, PartialEq)]
pub struct DwtFeature {
    pub levels: usize,
    pub approx: Vec<f64>,
    /// `details[0]` is the deepest level.
    pub details: Vec<Vec<f64>>,
}

impl DwtFeature {
    pub fn part_lengths(&self) -> Vec<usize> {
        std::iter::once(self.approx.len())
            .chain(self.details.iter().map(Vec::len))
            .collect()
    }

    /// `cA_L ‖ cD_L ‖ ... ‖ cD_1`.
    pub fn vector(&self) -> Vec<f64> {
        let mut v = self.approx.clone();
        for d in &self.details {
            v.extend_from_slice(d);
        }
        v
    }

    pub fn from_vector(v: &[f64], levels: usize) -> Result<Self> {
        let n = v.len();
        check_len(n, levels)?;
        let approx = v[..n >> levels].to_vec();
        let mut details = Vec::with_capacity(levels);
        let mut at = n >> levels;
        for j in (1..=levels).rev() {
            let len = n >> j;
            details.push(v[at..at + len].to_vec());
            at += len;
        }
        Ok(Self { levels, approx, details })
    }
}

fn check_len(n: usize, levels: usize) -> Result<()> {
    if levels == 0 || n == 0 || n % (1 << levels) != 0 {
        return Err(Error::Data(format!(
            "segment length {n} is not divisible by 2^{levels}"
        )));
    }
    Ok(())
}

/// One analysis step: `a[n] = sum_k h[k] x[(2n - k) mod N]`, same for the high-pass.
pub fn analysis_step(x: &[f64], bank: &WaveletFilterBank) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for i in 0..half {
        let (mut sa, mut sd) = (0.0, 0.0);
        for (k, (&hk, &gk)) in bank.h.iter().zip(&bank.g).enumerate() {
            let idx = (2 * i + n * bank.h.len() - k) % n;
            sa += hk * x[idx];
            sd += gk * x[idx];
        }
        a[i] = sa;
        d[i] = sd;
    }
    (a, d)
}

/// Transpose of [`analysis_step`]; the exact inverse because the periodized bank is orthogonal.
pub fn synthesis_step(a: &[f64], d: &[f64], bank: &WaveletFilterBank) -> Vec<f64> {
    let n = 2 * a.len();
    let mut x = vec![0.0; n];
    for i in 0..a.len() {
        for (k, (&hk, &gk)) in bank.h.iter().zip(&bank.g).enumerate() {
            let idx = (2 * i + n * bank.h.len() - k) % n;
            x[idx] += hk * a[i] + gk * d[i];
        }
    }
    x
}

pub fn dwt_decompose(x: &[f64], bank: &WaveletFilterBank, levels: usize) -> Result<DwtFeature> {
    check_len(x.len(), levels)?;
    let mut approx = x.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analysis_step(&approx, bank);
        details.push(d);
        approx = a;
    }
    details.reverse();
    Ok(DwtFeature { levels, approx, details })
}

pub fn dwt_reconstruct(feature: &DwtFeature, bank: &WaveletFilterBank) -> Vec<f64> {
    let mut x = feature.approx.clone();
    for d in &feature.details {
        x = synthesis_step(&x, d, bank);
    }
    x
}
