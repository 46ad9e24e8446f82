//! Continuous-EDF subset: 256-byte main header, 256 bytes of per-signal header per
//! signal, then data records of interleaved 16-bit little-endian samples. Field
//! widths and offsets are listed in `docs/FORMATS.md`.

use super::EcgRecord;
use crate::error::{EdfError, Result};

pub const HEADER_BLOCK: usize = 256;

/// Main-header fields in file order with their byte widths.
const MAIN_FIELDS: [(&str, usize); 10] = [
    ("version", 8),
    ("patient", 80),
    ("recording", 80),
    ("start date", 8),
    ("start time", 8),
    ("header bytes", 8),
    ("reserved", 44),
    ("data records", 8),
    ("record duration", 8),
    ("signal count", 4),
];

/// Per-signal fields; each is stored for all signals before the next field begins.
const SIGNAL_FIELDS: [(&str, usize); 10] = [
    ("label", 16),
    ("transducer", 80),
    ("physical dimension", 8),
    ("physical minimum", 8),
    ("physical maximum", 8),
    ("digital minimum", 8),
    ("digital maximum", 8),
    ("prefiltering", 80),
    ("samples per record", 8),
    ("signal reserved", 32),
];

#[derive(Debug, Clone, PartialEq)]
pub struct EdfHeader {
    pub version: String,
    pub patient: String,
    pub recording: String,
    pub start_date: String,
    pub start_time: String,
    pub header_bytes: usize,
    pub reserved: String,
    /// `-1` when unknown; the reader then infers the count from the data length.
    pub num_records: i64,
    pub record_duration_s: f64,
    pub signals: Vec<EdfSignalHeader>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdfSignalHeader {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
    pub reserved: String,
}

impl EdfSignalHeader {
    /// Maps a stored digital value to physical units.
    pub fn to_physical(&self, digital: i16) -> f64 {
        let (dmin, dmax) = (self.digital_min as f64, self.digital_max as f64);
        self.physical_min + (digital as f64 - dmin) * (self.physical_max - self.physical_min) / (dmax - dmin)
    }

    /// Nearest digital code for a physical value, clamped to the digital range.
    pub fn to_digital(&self, physical: f64) -> i16 {
        let (dmin, dmax) = (self.digital_min as f64, self.digital_max as f64);
        let d = (physical - self.physical_min) * (dmax - dmin) / (self.physical_max - self.physical_min) + dmin;
        d.round().clamp(dmin, dmax) as i16
    }

    /// Physical size of one digital step.
    pub fn quantization_step(&self) -> f64 {
        (self.physical_max - self.physical_min) / (self.digital_max - self.digital_min) as f64
    }
}

impl EdfHeader {
    fn record_bytes(&self) -> usize {
        self.signals.iter().map(|s| 2 * s.samples_per_record).sum()
    }
}

struct Fields<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Fields<'a> {
    fn take(&mut self, name: &str, width: usize) -> std::result::Result<String, EdfError> {
        let end = self.pos + width;
        let raw = self.bytes.get(self.pos..end).ok_or_else(|| {
            EdfError::MalformedHeader(format!("header ends inside field {name:?} at byte {}", self.pos))
        })?;
        if !raw.iter().all(|b| (0x20..=0x7e).contains(b)) {
            return Err(EdfError::MalformedHeader(format!(
                "field {name:?} at byte {} contains non-printable or non-ASCII bytes",
                self.pos
            )));
        }
        self.pos = end;
        Ok(String::from_utf8_lossy(raw).trim_end().to_string())
    }
}

fn number<T: std::str::FromStr>(name: &str, text: &str) -> std::result::Result<T, EdfError> {
    text.trim()
        .parse::<T>()
        .map_err(|_| EdfError::MalformedHeader(format!("field {name:?} = {text:?} is not a valid number")))
}

pub fn parse_edf_header(bytes: &[u8]) -> std::result::Result<EdfHeader, EdfError> {
    if bytes.len() < HEADER_BLOCK {
        return Err(EdfError::MalformedHeader(format!(
            "file is {} bytes, shorter than the {HEADER_BLOCK}-byte main header",
            bytes.len()
        )));
    }
    let mut f = Fields { bytes, pos: 0 };
    let mut main = Vec::with_capacity(MAIN_FIELDS.len());
    for (name, width) in MAIN_FIELDS {
        main.push(f.take(name, width)?);
    }
    let ns: usize = number("signal count", &main[9])?;
    if ns == 0 {
        return Err(EdfError::MalformedHeader("file declares zero signals".into()));
    }
    let header_bytes: usize = number("header bytes", &main[5])?;
    if header_bytes != HEADER_BLOCK * (ns + 1) {
        return Err(EdfError::MalformedHeader(format!(
            "header bytes field is {header_bytes}, expected {} for {ns} signals",
            HEADER_BLOCK * (ns + 1)
        )));
    }
    let mut cols: Vec<Vec<String>> = Vec::with_capacity(SIGNAL_FIELDS.len());
    for (name, width) in SIGNAL_FIELDS {
        let mut col = Vec::with_capacity(ns);
        for _ in 0..ns {
            col.push(f.take(name, width)?);
        }
        cols.push(col);
    }
    let mut signals = Vec::with_capacity(ns);
    for i in 0..ns {
        signals.push(EdfSignalHeader {
            label: cols[0][i].trim().to_string(),
            transducer: cols[1][i].clone(),
            physical_dimension: cols[2][i].clone(),
            physical_min: number("physical minimum", &cols[3][i])?,
            physical_max: number("physical maximum", &cols[4][i])?,
            digital_min: number("digital minimum", &cols[5][i])?,
            digital_max: number("digital maximum", &cols[6][i])?,
            prefiltering: cols[7][i].clone(),
            samples_per_record: number("samples per record", &cols[8][i])?,
            reserved: cols[9][i].clone(),
        });
    }
    let num_records: i64 = number("data records", &main[7])?;
    if num_records < -1 {
        return Err(EdfError::MalformedHeader(format!("data record count {num_records}")));
    }
    let record_duration_s: f64 = number("record duration", &main[8])?;
    if !(record_duration_s > 0.0) {
        return Err(EdfError::MalformedHeader(format!(
            "record duration {record_duration_s} must be positive"
        )));
    }
    Ok(EdfHeader {
        version: main[0].clone(),
        patient: main[1].clone(),
        recording: main[2].clone(),
        start_date: main[3].clone(),
        start_time: main[4].clone(),
        header_bytes,
        reserved: main[6].clone(),
        num_records,
        record_duration_s,
        signals,
    })
}

/// Decodes one channel of a continuous EDF file into physical units.
pub fn parse_edf(bytes: &[u8], channel_name: &str) -> Result<EcgRecord> {
    let header = parse_edf_header(bytes)?;
    let idx = header
        .signals
        .iter()
        .position(|s| s.label.trim().eq_ignore_ascii_case(channel_name.trim()))
        .ok_or_else(|| EdfError::UnknownChannel {
            requested: channel_name.to_string(),
            available: header.signals.iter().map(|s| s.label.clone()).collect(),
        })?;
    let sig = &header.signals[idx];
    if sig.digital_max == sig.digital_min {
        return Err(EdfError::DegenerateScaling {
            label: sig.label.clone(),
            value: sig.digital_min,
        }
        .into());
    }
    let rate = sig.samples_per_record as f64 / header.record_duration_s;
    if sig.samples_per_record == 0 || (rate - rate.round()).abs() > 1e-9 {
        return Err(EdfError::MalformedHeader(format!(
            "channel {:?} has a non-integer sampling rate {rate} Hz",
            sig.label
        ))
        .into());
    }
    let record_bytes = header.record_bytes();
    let data = &bytes[header.header_bytes..];
    let expected = if header.num_records >= 0 {
        header.num_records as usize
    } else {
        data.len().div_ceil(record_bytes)
    };
    if data.len() < expected * record_bytes {
        return Err(EdfError::Truncated {
            record: data.len() / record_bytes,
            expected,
        }
        .into());
    }
    let offset_in_record: usize = header.signals[..idx].iter().map(|s| 2 * s.samples_per_record).sum();
    let mut samples = Vec::with_capacity(expected * sig.samples_per_record);
    for r in 0..expected {
        let start = r * record_bytes + offset_in_record;
        for pair in data[start..start + 2 * sig.samples_per_record].chunks_exact(2) {
            samples.push(sig.to_physical(i16::from_le_bytes([pair[0], pair[1]])));
        }
    }
    let patient_id = header
        .patient
        .split_whitespace()
        .next()
        .unwrap_or("unknown")
        .to_string();
    EcgRecord::new(patient_id, rate.round() as u32, samples)
}

fn pad(out: &mut Vec<u8>, name: &str, text: &str, width: usize) -> Result<()> {
    if text.len() > width || !text.bytes().all(|b| (0x20..=0x7e).contains(&b)) {
        return Err(EdfError::MalformedHeader(format!(
            "cannot store {text:?} in the {width}-byte field {name:?}"
        ))
        .into());
    }
    out.extend_from_slice(text.as_bytes());
    out.extend(std::iter::repeat_n(b' ', width - text.len()));
    Ok(())
}

/// Shortest decimal text of at most `width` characters for `v`.
fn fit_number(v: f64, width: usize) -> String {
    let plain = format!("{v}");
    if plain.len() <= width {
        return plain;
    }
    for decimals in (0..width).rev() {
        let s = format!("{v:.decimals$}");
        if s.len() <= width {
            return s;
        }
    }
    plain
}

/// Serializes a header and per-signal digital samples (one `Vec` per signal, each a
/// whole number of data records long).
pub fn write_edf(header: &EdfHeader, digital: &[Vec<i16>]) -> Result<Vec<u8>> {
    let ns = header.signals.len();
    if digital.len() != ns || ns == 0 {
        return Err(EdfError::MalformedHeader(format!(
            "{} sample buffers for {ns} signals",
            digital.len()
        ))
        .into());
    }
    let n_records = if header.num_records >= 0 {
        header.num_records as usize
    } else {
        digital[0].len() / header.signals[0].samples_per_record.max(1)
    };
    for (s, d) in header.signals.iter().zip(digital) {
        if d.len() != n_records * s.samples_per_record {
            return Err(EdfError::MalformedHeader(format!(
                "signal {:?} has {} samples, expected {}",
                s.label,
                d.len(),
                n_records * s.samples_per_record
            ))
            .into());
        }
    }
    let mut out = Vec::with_capacity(HEADER_BLOCK * (ns + 1) + digital.iter().map(|d| 2 * d.len()).sum::<usize>());
    let main = [
        header.version.clone(),
        header.patient.clone(),
        header.recording.clone(),
        header.start_date.clone(),
        header.start_time.clone(),
        (HEADER_BLOCK * (ns + 1)).to_string(),
        header.reserved.clone(),
        header.num_records.to_string(),
        fit_number(header.record_duration_s, 8),
        ns.to_string(),
    ];
    for ((name, width), text) in MAIN_FIELDS.iter().zip(&main) {
        pad(&mut out, name, text, *width)?;
    }
    for (fi, (name, width)) in SIGNAL_FIELDS.iter().enumerate() {
        for s in &header.signals {
            let text = match fi {
                0 => s.label.clone(),
                1 => s.transducer.clone(),
                2 => s.physical_dimension.clone(),
                3 => fit_number(s.physical_min, 8),
                4 => fit_number(s.physical_max, 8),
                5 => s.digital_min.to_string(),
                6 => s.digital_max.to_string(),
                7 => s.prefiltering.clone(),
                8 => s.samples_per_record.to_string(),
                _ => s.reserved.clone(),
            };
            pad(&mut out, name, &text, *width)?;
        }
    }
    for r in 0..n_records {
        for (s, d) in header.signals.iter().zip(digital) {
            let spr = s.samples_per_record;
            for v in &d[r * spr..(r + 1) * spr] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Writes a record as a one-signal EDF file with one-second data records, quantizing
/// to the full 16-bit range over `[physical_min, physical_max]` millivolts. Trailing
/// samples that do not fill a whole second are dropped.
pub fn encode_record_edf(
    record: &EcgRecord,
    label: &str,
    physical_min: f64,
    physical_max: f64,
) -> Result<(EdfHeader, Vec<u8>)> {
    let fs = record.sampling_rate_hz() as usize;
    let n_records = record.len() / fs;
    let header = EdfHeader {
        version: "0".into(),
        patient: record.patient_id().to_string(),
        recording: "Startdate X X X X".into(),
        start_date: "01.01.00".into(),
        start_time: "00.00.00".into(),
        header_bytes: 2 * HEADER_BLOCK,
        reserved: String::new(),
        num_records: n_records as i64,
        record_duration_s: 1.0,
        signals: vec![EdfSignalHeader {
            label: label.to_string(),
            transducer: "synthetic".into(),
            physical_dimension: "mV".into(),
            physical_min,
            physical_max,
            digital_min: -32768,
            digital_max: 32767,
            prefiltering: String::new(),
            samples_per_record: fs,
            reserved: String::new(),
        }],
    };
    let sig = &header.signals[0];
    let digital: Vec<i16> = record.samples()[..n_records * fs]
        .iter()
        .map(|&v| sig.to_digital(v))
        .collect();
    let bytes = write_edf(&header, &[digital])?;
    Ok((header, bytes))
}
