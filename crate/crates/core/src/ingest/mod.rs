//! Recordings, seizure annotations and patient metadata.

mod annotations;
mod csv;
mod edf;
mod meta;
mod synthetic;

pub use annotations::{load_annotations, validate_annotations, SeizureAnnotation, SeizureType};
pub use csv::{parse_csv, to_csv};
pub use edf::{
    encode_record_edf, parse_edf, parse_edf_header, write_edf, EdfHeader, EdfSignalHeader,
    HEADER_BLOCK,
};
pub use meta::{parse_patient_meta, Gender, PatientMeta};
pub use synthetic::{generate_synthetic, SyntheticEvent, SyntheticSpec};

use crate::error::{Error, Result};

/// One patient's continuous single-channel ECG (millivolts) and its seizure annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    patient_id: String,
    sampling_rate_hz: u32,
    samples: Vec<f64>,
    annotations: Vec<SeizureAnnotation>,
}

impl EcgRecord {
    pub fn new(patient_id: impl Into<String>, sampling_rate_hz: u32, samples: Vec<f64>) -> Result<Self> {
        if sampling_rate_hz == 0 {
            return Err(Error::Record("sampling rate must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::Record("record has no samples".into()));
        }
        Ok(Self {
            patient_id: patient_id.into(),
            sampling_rate_hz,
            samples,
            annotations: Vec::new(),
        })
    }

    /// Attaches annotations after checking order, overlap and that each lies within the record.
    pub fn with_annotations(mut self, mut annotations: Vec<SeizureAnnotation>) -> Result<Self> {
        annotations.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s));
        validate_annotations(&annotations)?;
        let duration = self.duration_s();
        if let Some(a) = annotations.iter().find(|a| a.offset_s > duration + 1e-9) {
            return Err(Error::Record(format!(
                "annotation [{}, {}] extends past the record end ({duration} s)",
                a.onset_s, a.offset_s
            )));
        }
        self.annotations = annotations;
        Ok(self)
    }

    /// Same metadata and annotations around a new sample buffer of equal length.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != self.samples.len() {
            return Err(Error::Record(format!(
                "replacement has {} samples, record has {}",
                samples.len(),
                self.samples.len()
            )));
        }
        Ok(Self {
            samples,
            ..self.clone()
        })
    }

    pub fn with_patient_id(mut self, id: impl Into<String>) -> Self {
        self.patient_id = id.into();
        self
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }

    pub fn sampling_rate_hz(&self) -> u32 {
        self.sampling_rate_hz
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn annotations(&self) -> &[SeizureAnnotation] {
        &self.annotations
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sampling_rate_hz as f64
    }
}
