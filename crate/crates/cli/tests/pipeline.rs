use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use preictal_cli::synth::{default_fixture, write_fixture};
use preictal_core::ingest::{SyntheticEvent, SyntheticSpec};

fn preictal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_preictal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Fifteen-minute record with one event; short training so the whole pipeline runs in seconds.
fn small_fixture(dir: &Path) -> PathBuf {
    let spec = SyntheticSpec {
        duration_s: 900.0,
        events: vec![SyntheticEvent::new(600.0, 300.0, 30.0, 0.2)],
        ..default_fixture(5)
    };
    let conf = write_fixture(dir, &spec).unwrap();
    let mut text = std::fs::read_to_string(&conf).unwrap();
    text.push_str("epochs = 3\npreictal_len_s = 300\npostictal_len_s = 60\nsmoothing_w = 5\n");
    std::fs::write(&conf, text).unwrap();
    conf
}

#[test]
fn score_before_train_names_train() {
    let dir = tempfile::tempdir().unwrap();
    let conf = small_fixture(dir.path());
    let c = conf.to_str().unwrap();
    for stage in ["convert", "preprocess", "extract"] {
        let o = preictal(&[stage, "--config", c]);
        assert!(o.status.success(), "{stage}: {}", stderr(&o));
    }
    let o = preictal(&["score", "--config", c]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("model.bin") && err.contains("run `train` first"), "{err}");
}

#[test]
fn first_stage_missing_names_convert() {
    let dir = tempfile::tempdir().unwrap();
    let conf = small_fixture(dir.path());
    let o = preictal(&["extract", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("run `preprocess` first"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let conf = small_fixture(dir.path());
    let mut text = std::fs::read_to_string(&conf).unwrap();
    text.push_str("window_s = 1\noverlap_s = 5\n");
    std::fs::write(&conf, text).unwrap();
    let o = preictal(&["all", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("overlap_s"), "{}", stderr(&o));

    std::fs::write(&conf, "record = missing.edf\n").unwrap();
    let o = preictal(&["convert", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.edf"), "{}", stderr(&o));
}

#[test]
fn all_is_deterministic_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let conf = small_fixture(dir.path());
    let c = conf.to_str().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let o = preictal(&["all", "--config", c, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    for f in ["metrics.json", "metrics.csv", "report.svg", "model.bin", "scores.csv", "evaluation.json"] {
        assert_eq!(read(&out_a, f), read(&out_b, f), "{f}");
    }

    let svg = String::from_utf8(read(&out_a, "report.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="threshold""#).count(), 1);
    assert_eq!(svg.matches(r#"class="preictal""#).count(), 1);
    assert_eq!(svg.matches(r#"class="onset""#).count(), 1);
    let metrics: serde_json::Value = serde_json::from_slice(&read(&out_a, "metrics.json")).unwrap();
    assert_eq!(metrics["patients"][0]["patient_id"], "synthetic");
    assert_eq!(metrics["aggregate"]["patients"], 1);

    // A second run reuses everything.
    let o = preictal(&["all", "--config", c, "--out", out_a.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
    assert_eq!(stdout.matches("cached").count(), 7, "{stdout}");

    // Deleting an intermediate recomputes it bit-identically; downstream stays cached.
    let features = read(&out_a, "features.bin");
    std::fs::remove_file(out_a.join("features.bin")).unwrap();
    let o = preictal(&["all", "--config", c, "--out", out_a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(&out_a, "features.bin"), features);
    let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
    assert_eq!(stdout.matches("cached").count(), 6, "{stdout}");

    // A changed seed retrains.
    let o = preictal(&["train", "--config", c, "--out", out_a.to_str().unwrap(), "--seed", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_ne!(read(&out_a, "model.bin"), read(&out_b, "model.bin"));
    let manifest: serde_json::Value = serde_json::from_slice(&read(&out_a, "manifest.json")).unwrap();
    assert_eq!(manifest["stages"]["train"]["cached"], false);
}
