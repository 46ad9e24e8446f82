//! Synthetic fixture writer: an EDF record, its annotation sidecar and a pipeline config.

use std::path::{Path, PathBuf};

use preictal_core::ingest::{encode_record_edf, generate_synthetic, SyntheticEvent, SyntheticSpec};

use crate::error::{CliError, StageContext};

pub const RECORD_FILE: &str = "record.edf";
pub const ANNOTATIONS_FILE: &str = "annotations.csv";
pub const CONFIG_FILE: &str = "pipeline.conf";
pub const CHANNEL: &str = "EKG";

/// Two-hour record at 512 Hz with two events whose 30-minute lead windows carry a
/// heart-rate ramp and pulse-shape jitter.
pub fn default_fixture(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        duration_s: 7200.0,
        sampling_rate_hz: 512,
        base_hr_bpm: 67.3,
        rr_jitter_std: 0.0,
        noise_std: 0.0,
        pulse_amp_mv: 1.0,
        pulse_width_s: 0.02,
        events: vec![
            SyntheticEvent::new(3600.0, 1800.0, 30.0, 0.2),
            SyntheticEvent::new(6600.0, 1800.0, 30.0, 0.2),
        ],
        rng_seed: seed,
    }
}

/// Writes the fixture files into `dir` and returns the config path.
pub fn write_fixture(dir: &Path, spec: &SyntheticSpec) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let record = generate_synthetic(spec).stage("synth")?;
    let peak = record.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let range = (peak * 1.25).max(1e-3);
    let (_, edf) = encode_record_edf(&record, CHANNEL, -range, range).stage("synth")?;
    let write = |name: &str, bytes: &[u8]| {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(CliError::io(path))
    };
    write(RECORD_FILE, &edf)?;
    let mut ann = String::from("onset_s,offset_s,type\n");
    for a in record.annotations() {
        ann.push_str(&format!("{},{},{}\n", a.onset_s, a.offset_s, a.seizure_type.as_str()));
    }
    write(ANNOTATIONS_FILE, ann.as_bytes())?;
    write(
        CONFIG_FILE,
        format!(
            "# synthetic fixture, seed {}\nrecord = {RECORD_FILE}\nannotations = {ANNOTATIONS_FILE}\nchannel = {CHANNEL}\npatient_id = synthetic\nout = out\n",
            spec.rng_seed
        )
        .as_bytes(),
    )?;
    Ok(dir.join(CONFIG_FILE))
}
