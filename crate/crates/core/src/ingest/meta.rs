use std::str::FromStr;

use super::SeizureType;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gender {
    Male,
    Female,
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" | "male" => Ok(Gender::Male),
            "f" | "female" => Ok(Gender::Female),
            other => Err(format!("unknown gender {other:?}")),
        }
    }
}

/// One row of the patient table.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientMeta {
    pub patient_id: String,
    pub age: u32,
    pub gender: Gender,
    pub seizure_type: SeizureType,
    pub seizure_count: usize,
    pub recording_min: f64,
}

impl PatientMeta {
    /// Checks the declared seizure count against the annotations found across the patient's records.
    pub fn check_seizure_count(&self, annotations_total: usize) -> Result<()> {
        if self.seizure_count != annotations_total {
            return Err(Error::Data(format!(
                "patient {} declares {} seizures but {} annotations were found",
                self.patient_id, self.seizure_count, annotations_total
            )));
        }
        Ok(())
    }
}

/// Parses `patient_id,age,gender,seizure_type,seizure_count,recording_min` rows.
pub fn parse_patient_meta(text: &str) -> Result<Vec<PatientMeta>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let line_no = i + 1;
        if line.is_empty() || line.starts_with('#') || (out.is_empty() && line.starts_with("patient_id")) {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 6 {
            return Err(Error::parse(line_no, format!("expected 6 columns, found {}", cols.len())));
        }
        let bad = |what: &str, v: &str| Error::parse(line_no, format!("invalid {what} {v:?}"));
        let recording_min: f64 = cols[5].parse().map_err(|_| bad("recording_min", cols[5]))?;
        if !(recording_min > 0.0 && recording_min.is_finite()) {
            return Err(bad("recording_min", cols[5]));
        }
        out.push(PatientMeta {
            patient_id: cols[0].to_string(),
            age: cols[1].parse().map_err(|_| bad("age", cols[1]))?,
            gender: cols[2].parse().map_err(|e: String| Error::parse(line_no, e))?,
            seizure_type: cols[3].parse().map_err(|e: String| Error::parse(line_no, e))?,
            seizure_count: cols[4].parse().map_err(|_| bad("seizure_count", cols[4]))?,
            recording_min,
        });
    }
    Ok(out)
}
