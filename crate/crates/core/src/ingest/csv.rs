use super::EcgRecord;
use crate::error::{Error, Result};

/// Reads `time_s,mv` rows (optional header line). The sampling rate is
/// `round(1 / mean step)`; every individual step must lie within 1% of `1 / rate`.
pub fn parse_csv(text: &str) -> Result<EcgRecord> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut first_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let line_no = i + 1;
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if first_line.is_none() {
            first_line = Some(line_no);
            if cols.first().is_some_and(|c| c.parse::<f64>().is_err()) && cols[0].starts_with("time") {
                continue;
            }
        }
        if cols.len() != 2 {
            return Err(Error::parse(line_no, format!("expected 2 columns, found {}", cols.len())));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(line_no, format!("{s:?} is not a finite number")))
        };
        times.push((line_no, parse(cols[0])?));
        values.push(parse(cols[1])?);
    }
    if times.len() < 2 {
        return Err(Error::parse(
            first_line.unwrap_or(1),
            "need at least two samples to infer the sampling rate",
        ));
    }
    let span = times.last().unwrap().1 - times[0].1;
    if !(span > 0.0) {
        return Err(Error::parse(times[1].0, "time column is not strictly increasing"));
    }
    let rate = ((times.len() - 1) as f64 / span).round();
    if rate < 1.0 {
        return Err(Error::parse(times[1].0, "sampling rate below 1 Hz"));
    }
    let step = 1.0 / rate;
    for pair in times.windows(2) {
        let dt = pair[1].1 - pair[0].1;
        if (dt - step).abs() > 0.01 * step {
            return Err(Error::parse(
                pair[1].0,
                format!("non-uniform sampling: step {dt} s deviates from 1/{rate} s by more than 1%"),
            ));
        }
    }
    EcgRecord::new("unknown", rate as u32, values)
}

/// Serializes with 17 significant digits so that [`parse_csv`] restores every sample bit-exactly.
pub fn to_csv(record: &EcgRecord) -> String {
    let fs = record.sampling_rate_hz() as f64;
    let mut out = String::with_capacity(record.len() * 48 + 16);
    out.push_str("time_s,mv\n");
    for (n, v) in record.samples().iter().enumerate() {
        out.push_str(&format!("{:.16e},{:.16e}\n", n as f64 / fs, v));
    }
    out
}
