use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Seizure classes used in the patient table (focal impaired awareness, focal without
/// impaired awareness, focal to bilateral tonic-clonic).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeizureType {
    Ias,
    Wias,
    Fbtc,
    Other,
}

impl SeizureType {
    pub fn as_str(self) -> &'static str {
        match self {
            SeizureType::Ias => "IAS",
            SeizureType::Wias => "WIAS",
            SeizureType::Fbtc => "FBTC",
            SeizureType::Other => "OTHER",
        }
    }
}

impl fmt::Display for SeizureType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeizureType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "IAS" => Ok(SeizureType::Ias),
            "WIAS" => Ok(SeizureType::Wias),
            "FBTC" => Ok(SeizureType::Fbtc),
            "OTHER" => Ok(SeizureType::Other),
            other => Err(format!("unknown seizure type {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeizureAnnotation {
    pub onset_s: f64,
    pub offset_s: f64,
    pub seizure_type: SeizureType,
}

impl SeizureAnnotation {
    pub fn new(onset_s: f64, offset_s: f64, seizure_type: SeizureType) -> Result<Self> {
        if !(onset_s.is_finite() && offset_s.is_finite()) || onset_s < 0.0 {
            return Err(Error::Record(format!("bad annotation times [{onset_s}, {offset_s}]")));
        }
        if offset_s <= onset_s {
            return Err(Error::Record(format!(
                "annotation offset {offset_s} s is not after onset {onset_s} s"
            )));
        }
        Ok(Self {
            onset_s,
            offset_s,
            seizure_type,
        })
    }
}

/// Checks a sorted annotation list for overlaps.
pub fn validate_annotations(annotations: &[SeizureAnnotation]) -> Result<()> {
    for pair in annotations.windows(2) {
        if pair[1].onset_s < pair[0].onset_s {
            return Err(Error::Record("annotations are not sorted by onset".into()));
        }
        if pair[1].onset_s <= pair[0].offset_s {
            return Err(Error::Record(format!(
                "annotation [{}, {}] overlaps [{}, {}]",
                pair[1].onset_s, pair[1].offset_s, pair[0].onset_s, pair[0].offset_s
            )));
        }
    }
    Ok(())
}

/// Parses the `onset_s,offset_s,type` sidecar. A header row, blank lines and `#`
/// comments are skipped. The result is sorted by onset.
pub fn load_annotations(text: &str) -> Result<Vec<SeizureAnnotation>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if out.is_empty() && cols.first().is_some_and(|c| c.parse::<f64>().is_err()) && cols[0].starts_with("onset") {
            continue;
        }
        if cols.len() != 3 {
            return Err(Error::parse(line_no, format!("expected 3 columns, found {}", cols.len())));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(line_no, format!("{what} {s:?} is not a number")))
        };
        let onset = num(cols[0], "onset")?;
        let offset = num(cols[1], "offset")?;
        let kind = cols[2].parse::<SeizureType>().map_err(|e| Error::parse(line_no, e))?;
        let ann = SeizureAnnotation::new(onset, offset, kind).map_err(|e| Error::parse(line_no, e.to_string()))?;
        out.push(ann);
    }
    out.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s));
    validate_annotations(&out)?;
    Ok(out)
}
