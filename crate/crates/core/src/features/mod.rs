//! Time-frequency representations of segments and their normalization.

mod cwt;
mod dwt;
mod normalize;
mod stft;
mod wavelet;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

pub use cwt::{cwt_scalogram, kernel as mexh_kernel, mexh, CwtPlan, Scalogram, SCALES, SUPPORT, TIME_STRIDE};
pub use dwt::{analysis_step, dwt_decompose, dwt_reconstruct, synthesis_step, DwtFeature};
pub use normalize::{apply_normalization, fit_normalization, NormalizationStats, SIGMA_FLOOR};
pub use stft::{
    frame_count, frames as stft_frames, reflect_index, stft_spectrogram, Spectrogram, StftPlan, WindowKind, BINS,
    HOP, WINDOW,
};
pub use wavelet::WaveletFilterBank;

use crate::error::{Error, Result};
use crate::preprocess::SegmentSet;

pub const DWT_LEVELS: usize = 3;
/// DWT vectors enter the models as this many steps.
pub const DWT_STEPS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    Dwt,
    Scalogram,
    Spectrogram,
}

impl Representation {
    pub const ALL: [Representation; 3] = [Representation::Dwt, Representation::Scalogram, Representation::Spectrogram];

    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Dwt => "dwt",
            Representation::Scalogram => "scalogram",
            Representation::Spectrogram => "spectrogram",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Representation::Dwt => 0,
            Representation::Scalogram => 1,
            Representation::Spectrogram => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// `(steps, features)` of the model input for a segment of `n` samples.
    pub fn layout(self, n: usize) -> Result<(usize, usize)> {
        match self {
            Representation::Dwt => {
                if n % DWT_STEPS != 0 || n % (1 << DWT_LEVELS) != 0 {
                    return Err(Error::Data(format!(
                        "DWT layout needs a segment length divisible by {DWT_STEPS}, got {n}"
                    )));
                }
                Ok((DWT_STEPS, n / DWT_STEPS))
            }
            Representation::Scalogram => Ok((n.div_ceil(TIME_STRIDE), SCALES)),
            Representation::Spectrogram => Ok((frame_count(n), BINS)),
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Representation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dwt" => Ok(Representation::Dwt),
            "scalogram" | "cwt" => Ok(Representation::Scalogram),
            "spectrogram" | "stft" => Ok(Representation::Spectrogram),
            other => Err(format!("unknown representation {other:?} (expected dwt, scalogram or spectrogram)")),
        }
    }
}

/// Reusable transform state for one representation and segment length.
pub enum Extractor {
    Dwt(WaveletFilterBank),
    Scalogram(CwtPlan),
    Spectrogram(StftPlan),
}

impl Extractor {
    pub fn new(representation: Representation, n: usize) -> Result<Self> {
        representation.layout(n)?;
        Ok(match representation {
            Representation::Dwt => Extractor::Dwt(WaveletFilterBank::sym4()),
            Representation::Scalogram => Extractor::Scalogram(CwtPlan::new(n)),
            Representation::Spectrogram => Extractor::Spectrogram(StftPlan::new(WindowKind::Hann)),
        })
    }

    /// Unnormalized feature in model layout (time-major, row-major).
    pub fn extract(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            Extractor::Dwt(bank) => dwt_decompose(x, bank, DWT_LEVELS)?.vector(),
            Extractor::Scalogram(plan) => {
                if plan.len() != x.len() {
                    return Err(Error::Data(format!(
                        "scalogram plan built for {} samples, segment has {}",
                        plan.len(),
                        x.len()
                    )));
                }
                plan.scalogram(x).time_major()
            }
            Extractor::Spectrogram(plan) => plan.spectrogram(x).values,
        })
    }
}

/// Unnormalized features of every segment, in segment order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub representation: Representation,
    pub steps: usize,
    pub features: usize,
    pub data: Vec<Vec<f64>>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.steps * self.features
    }

    pub fn select(&self, indices: &[usize]) -> Vec<&[f64]> {
        indices.iter().map(|&i| self.data[i].as_slice()).collect()
    }
}

pub fn extract_features(set: &SegmentSet, representation: Representation) -> Result<FeatureSet> {
    let n = set.config.window_samples();
    let (steps, features) = representation.layout(n)?;
    let ex = Extractor::new(representation, n)?;
    let data = set
        .segments
        .par_iter()
        .map(|s| ex.extract(&s.samples))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureSet {
        representation,
        steps,
        features,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts() {
        assert_eq!(Representation::Dwt.layout(512).unwrap(), (32, 16));
        assert_eq!(Representation::Scalogram.layout(512).unwrap(), (128, 128));
        assert_eq!(Representation::Spectrogram.layout(512).unwrap(), (5, 257));
        assert_eq!(Representation::Dwt.layout(5120).unwrap(), (32, 160));
        assert_eq!(Representation::Spectrogram.layout(2560).unwrap(), (21, 257));
        assert!(Representation::Dwt.layout(500).is_err());
        assert_eq!("STFT".parse::<Representation>().unwrap(), Representation::Spectrogram);
        assert!("wavelet".parse::<Representation>().is_err());
    }

    #[test]
    fn extracted_lengths_match_layout() {
        let x: Vec<f64> = (0..512).map(|i| (i as f64 * 0.1).sin()).collect();
        for r in Representation::ALL {
            let (s, f) = r.layout(512).unwrap();
            assert_eq!(Extractor::new(r, 512).unwrap().extract(&x).unwrap().len(), s * f);
        }
    }
}
