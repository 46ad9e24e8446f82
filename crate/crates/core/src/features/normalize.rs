use crate::error::{Error, Result};

pub const SIGMA_FLOOR: f64 = 1e-8;

/// Per-dimension z-score statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    /// Population standard deviation, floored at [`SIGMA_FLOOR`].
    pub std: Vec<f64>,
}

impl NormalizationStats {
    pub fn dims(&self) -> usize {
        self.mean.len()
    }
}

pub fn fit_normalization(features: &[&[f64]]) -> Result<NormalizationStats> {
    if features.len() < 2 {
        return Err(Error::Data(format!(
            "normalization needs at least 2 training features, got {}",
            features.len()
        )));
    }
    let dims = features[0].len();
    if let Some(f) = features.iter().find(|f| f.len() != dims) {
        return Err(Error::Data(format!("feature of {} dimensions, expected {dims}", f.len())));
    }
    let n = features.len() as f64;
    let first = features[0];
    // Offsetting by the first feature keeps identical features exact.
    let mut mean = vec![0.0; dims];
    for f in features {
        for ((m, v), r) in mean.iter_mut().zip(*f).zip(first) {
            *m += v - r;
        }
    }
    for (m, r) in mean.iter_mut().zip(first) {
        *m = r + *m / n;
    }
    let mut var = vec![0.0; dims];
    for f in features {
        for ((s, v), m) in var.iter_mut().zip(*f).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt().max(SIGMA_FLOOR)).collect();
    Ok(NormalizationStats { mean, std })
}

pub fn apply_normalization(feature: &[f64], stats: &NormalizationStats) -> Result<Vec<f64>> {
    if feature.len() != stats.dims() {
        return Err(Error::Data(format!(
            "feature has {} dimensions, normalization stats have {}",
            feature.len(),
            stats.dims()
        )));
    }
    Ok(feature
        .iter()
        .zip(stats.mean.iter().zip(&stats.std))
        .map(|(v, (m, s))| (v - m) / s)
        .collect())
}
