//! Pipeline stages with file-based caching.

use std::path::{Path, PathBuf};
use std::time::Instant;

use preictal_core::anomaly::{detect, errors_csv, fit_threshold, smooth, AlarmEvent, Detection, ErrorSeries, Threshold};
use preictal_core::cache;
use preictal_core::evaluation::{aggregate, evaluate, EvalResult};
use preictal_core::features::{extract_features, FeatureSet};
use preictal_core::ingest::{load_annotations, parse_csv, parse_edf, EcgRecord};
use preictal_core::models::{build, score, select_baseline, train, TrainedModel};
use preictal_core::preprocess::{label_phases, lowpass, segment, Phase, SegmentSet, SegmentationConfig};
use serde::Serialize;
use serde_json::json;

use crate::config::PipelineConfig;
use crate::error::{CliError, StageContext};
use crate::manifest::{cache_key, file_digest, sha256_hex, RunManifest, StageEntry, TOOLKIT_VERSION};
use crate::report::{render_svg, Trace};

pub const RECORD: &str = "record.bin";
pub const SEGMENTS: &str = "segments.bin";
pub const FEATURES: &str = "features.bin";
pub const MODEL: &str = "model.bin";
pub const MODEL_JSON: &str = "model.json";
pub const SCORES: &str = "scores.csv";
pub const EVALUATION: &str = "evaluation.json";
pub const ERRORS: &str = "errors.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const REPORT_SVG: &str = "report.svg";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Convert,
    Preprocess,
    Extract,
    Train,
    Score,
    Evaluate,
    Report,
}

const ANALYSIS_KEYS: &[&str] = &["smoothing_w", "k", "preictal_len_s", "postictal_len_s", "refractory_s"];

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Convert,
        Stage::Preprocess,
        Stage::Extract,
        Stage::Train,
        Stage::Score,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Convert => "convert",
            Stage::Preprocess => "preprocess",
            Stage::Extract => "extract",
            Stage::Train => "train",
            Stage::Score => "score",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }

    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            Stage::Convert => &[RECORD],
            Stage::Preprocess => &[SEGMENTS],
            Stage::Extract => &[FEATURES],
            Stage::Train => &[MODEL, MODEL_JSON],
            Stage::Score => &[SCORES],
            Stage::Evaluate => &[EVALUATION, ERRORS],
            Stage::Report => &[METRICS_JSON, METRICS_CSV, REPORT_SVG],
        }
    }

    /// Upstream artifacts in the output directory.
    pub fn inputs(self) -> &'static [&'static str] {
        match self {
            Stage::Convert => &[],
            Stage::Preprocess => &[RECORD],
            Stage::Extract => &[SEGMENTS],
            Stage::Train => &[SEGMENTS, FEATURES],
            Stage::Score => &[SEGMENTS, FEATURES, MODEL, MODEL_JSON],
            Stage::Evaluate => &[RECORD, SEGMENTS, SCORES],
            Stage::Report => &[RECORD, SEGMENTS, SCORES, EVALUATION],
        }
    }

    /// Config keys whose values change this stage's outputs.
    pub fn config_keys(self) -> &'static [&'static str] {
        match self {
            Stage::Convert => &["channel", "patient_id"],
            Stage::Preprocess => &[
                "cutoff_hz",
                "filter_order",
                "zero_phase",
                "window_s",
                "overlap_s",
                "preictal_len_s",
                "postictal_len_s",
            ],
            Stage::Extract => &["representation"],
            Stage::Train => &[
                "architecture",
                "lstm_hidden",
                "latent",
                "conv_channels",
                "heads",
                "d_model",
                "ff_inner",
                "encoder_layers",
                "dropout",
                "epochs",
                "batch_size",
                "patience",
                "min_delta",
                "lr",
                "seed",
                "baseline_cap_s",
                "baseline_frac",
                "min_baseline_s",
            ],
            Stage::Score => &[],
            Stage::Evaluate | Stage::Report => ANALYSIS_KEYS,
        }
    }

    fn producer_of(artifact: &str) -> Stage {
        Stage::ALL
            .into_iter()
            .find(|s| s.outputs().contains(&artifact))
            .expect("every artifact has a producing stage")
    }
}

impl std::str::FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    pub stage: Stage,
    pub cached: bool,
    pub wall_clock_s: f64,
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
    manifest: RunManifest,
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(&path, bytes).map_err(CliError::io(path))
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(&cfg.out).map_err(CliError::io(&cfg.out))?;
        let mut manifest = RunManifest::load(&cfg.out);
        manifest.toolkit_version = TOOLKIT_VERSION.to_string();
        manifest.config_digest = sha256_hex(cfg.render().as_bytes());
        Ok(Self { cfg, manifest })
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn read(&self, name: &str) -> Result<Vec<u8>, CliError> {
        let path = self.out(name);
        if !path.exists() {
            return Err(CliError::MissingArtifact {
                stage: Stage::producer_of(name).name(),
                path,
            });
        }
        std::fs::read(&path).map_err(CliError::io(path))
    }

    fn external_input(&self, path: &Path, what: &str) -> Result<String, CliError> {
        if !path.exists() {
            return Err(CliError::Config(format!("{what}: file {} does not exist", path.display())));
        }
        file_digest(path)
    }

    fn key(&self, stage: Stage) -> Result<String, CliError> {
        let mut parts: Vec<(String, String)> = vec![
            ("toolkit".into(), TOOLKIT_VERSION.into()),
            ("stage".into(), stage.name().into()),
            ("config".into(), self.cfg.render_keys(stage.config_keys())),
        ];
        if stage == Stage::Convert {
            parts.push(("record".into(), self.external_input(&self.cfg.record, "record")?));
            if let Some(a) = &self.cfg.annotations {
                parts.push(("annotations".into(), self.external_input(a, "annotations")?));
            }
        }
        for name in stage.inputs() {
            let path = self.out(name);
            if !path.exists() {
                return Err(CliError::MissingArtifact {
                    stage: Stage::producer_of(name).name(),
                    path,
                });
            }
            parts.push((name.to_string(), file_digest(&path)?));
        }
        let borrowed: Vec<(&str, &str)> = parts.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        Ok(cache_key(&borrowed))
    }

    /// Runs one stage, reusing its outputs when the cache key and output files are unchanged.
    pub fn run(&mut self, stage: Stage, force: bool) -> Result<StageOutcome, CliError> {
        let key = self.key(stage)?;
        let started = Instant::now();
        let cached = !force && self.manifest.is_fresh(stage.name(), &key, &self.cfg.out);
        if !cached {
            let files = self.execute(stage)?;
            for (name, bytes) in &files {
                write(self.out(name), bytes)?;
            }
            let outputs = files.iter().map(|(n, b)| (n.to_string(), sha256_hex(b))).collect();
            self.manifest.stages.insert(
                stage.name().to_string(),
                StageEntry {
                    cache_key: key,
                    outputs,
                    wall_clock_s: started.elapsed().as_secs_f64(),
                    cached: false,
                },
            );
        } else if let Some(e) = self.manifest.stages.get_mut(stage.name()) {
            e.cached = true;
        }
        self.manifest.save(&self.cfg.out)?;
        Ok(StageOutcome {
            stage,
            cached,
            wall_clock_s: self.manifest.stages[stage.name()].wall_clock_s,
        })
    }

    pub fn run_all(&mut self, force: bool) -> Result<Vec<StageOutcome>, CliError> {
        Stage::ALL.into_iter().map(|s| self.run(s, force)).collect()
    }

    fn execute(&self, stage: Stage) -> Result<Vec<(&'static str, Vec<u8>)>, CliError> {
        match stage {
            Stage::Convert => Ok(vec![(RECORD, cache::encode_record(&self.convert()?))]),
            Stage::Preprocess => {
                let record = self.load_record(stage)?;
                let filtered = lowpass(&record, &self.cfg.filter).stage("preprocess")?;
                let seg_cfg = SegmentationConfig::new(self.cfg.window_s, self.cfg.overlap_s, record.sampling_rate_hz())
                    .stage("preprocess")?;
                let set = segment(&filtered, &seg_cfg).stage("preprocess")?;
                let set = label_phases(set, record.annotations(), &self.cfg.eval);
                Ok(vec![(SEGMENTS, cache::encode_segments(&set))])
            }
            Stage::Extract => {
                let set = self.load_segments(stage)?;
                let features = extract_features(&set, self.cfg.representation).stage("extract")?;
                Ok(vec![(FEATURES, cache::encode_features(&features))])
            }
            Stage::Train => {
                let set = self.load_segments(stage)?;
                let features = self.load_features(stage)?;
                let split = select_baseline(&set, &self.cfg.baseline).stage("train")?;
                let spec = build(
                    self.cfg.architecture,
                    features.representation,
                    features.steps,
                    features.features,
                    self.cfg.hyper,
                )
                .stage("train")?;
                let model = train(&spec, &features.select(&split.train), &self.cfg.train).stage("train")?;
                let sidecar = model_sidecar(&model, split.train.len(), split.limit_s);
                Ok(vec![(MODEL, cache::encode_model(&model)), (MODEL_JSON, json_bytes(&sidecar))])
            }
            Stage::Score => {
                let set = self.load_segments(stage)?;
                let features = self.load_features(stage)?;
                let model = cache::decode_model(&self.read(MODEL)?).stage("score")?;
                let sidecar: serde_json::Value = serde_json::from_slice(&self.read(MODEL_JSON)?)
                    .map_err(|e| data("score", format!("{MODEL_JSON}: {e}")))?;
                let baseline = sidecar["baseline"]["segments"]
                    .as_u64()
                    .ok_or_else(|| data("score", format!("{MODEL_JSON}: missing baseline.segments")))?
                    as usize;
                if features.len() != set.len() || baseline > set.len() {
                    return Err(data("score", "features, segments and model are out of step; rerun extract and train"));
                }
                let all: Vec<usize> = (0..set.len()).collect();
                let errors = score(&model, &features, &all).stage("score")?;
                Ok(vec![(SCORES, scores_csv(&set, baseline, &errors).into_bytes())])
            }
            Stage::Evaluate => {
                let a = self.analyze(stage)?;
                let doc = json!({
                    "patient_id": a.patient_id,
                    "threshold": a.threshold,
                    "smoothing_w": self.cfg.smoothing_w,
                    "refractory_gap_segments": a.refractory_gap,
                    "baseline_segments": a.train_len,
                    "alarm_events": a.detection.events,
                    "evaluation": a.result,
                });
                let csv = errors_csv(&a.test_raw, &a.test_smoothed, &a.detection.flags).stage("evaluate")?;
                Ok(vec![(EVALUATION, json_bytes(&doc)), (ERRORS, csv.into_bytes())])
            }
            Stage::Report => {
                self.read(EVALUATION)?;
                let a = self.analyze(stage)?;
                let results = [a.result.clone()];
                let metrics = json!({
                    "patients": [patient_metrics(&a.patient_id, &a.result)],
                    "aggregate": aggregate(&results),
                    "config": {
                        "representation": self.cfg.representation.as_str(),
                        "architecture": self.cfg.architecture.as_str(),
                        "seed": self.cfg.train.seed,
                        "smoothing_w": self.cfg.smoothing_w,
                        "k": self.cfg.k,
                    },
                });
                let svg = render_svg(&a.trace(self.cfg.window_s as f64));
                Ok(vec![
                    (METRICS_JSON, json_bytes(&metrics)),
                    (METRICS_CSV, metrics_csv(&a.patient_id, &a.result).into_bytes()),
                    (REPORT_SVG, svg.into_bytes()),
                ])
            }
        }
    }

    fn convert(&self) -> Result<EcgRecord, CliError> {
        let path = &self.cfg.record;
        let bytes = std::fs::read(path).map_err(CliError::io(path))?;
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        let mut record = match ext.as_str() {
            "edf" => parse_edf(&bytes, &self.cfg.channel).stage("convert")?,
            "csv" => {
                let text = String::from_utf8(bytes).map_err(|_| data("convert", "record CSV is not UTF-8"))?;
                parse_csv(&text).stage("convert")?
            }
            other => {
                return Err(CliError::Config(format!(
                    "record: unsupported file extension {other:?} (expected .edf or .csv)"
                )))
            }
        };
        if let Some(a) = &self.cfg.annotations {
            let text = std::fs::read_to_string(a).map_err(CliError::io(a))?;
            let anns = load_annotations(&text).stage("convert")?;
            record = record.with_annotations(anns).stage("convert")?;
        }
        if let Some(id) = &self.cfg.patient_id {
            record = record.with_patient_id(id.clone());
        }
        Ok(record)
    }

    fn load_record(&self, stage: Stage) -> Result<EcgRecord, CliError> {
        cache::decode_record(&self.read(RECORD)?).stage(stage.name())
    }

    fn load_segments(&self, stage: Stage) -> Result<SegmentSet, CliError> {
        cache::decode_segments(&self.read(SEGMENTS)?).stage(stage.name())
    }

    fn load_features(&self, stage: Stage) -> Result<FeatureSet, CliError> {
        cache::decode_features(&self.read(FEATURES)?).stage(stage.name())
    }

    fn analyze(&self, stage: Stage) -> Result<Analysis, CliError> {
        let name = stage.name();
        let record = self.load_record(stage)?;
        let set = self.load_segments(stage)?;
        let text = String::from_utf8(self.read(SCORES)?).map_err(|_| data(name, "scores.csv is not UTF-8"))?;
        let rows = parse_scores(&text).map_err(|m| data(name, format!("{SCORES}: {m}")))?;
        if rows.len() != set.len() || rows.iter().enumerate().any(|(i, r)| r.index != i) {
            return Err(data(name, "scores do not cover the segment set; rerun score"));
        }
        let train_len = rows.iter().take_while(|r| r.baseline).count();
        if rows[train_len..].iter().any(|r| r.baseline) {
            return Err(data(name, "baseline rows must form the leading run of scores.csv"));
        }
        if train_len == set.len() {
            return Err(data(name, "no held-out segments to evaluate"));
        }
        let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
        let w = self.cfg.smoothing_w;
        let train_raw = ErrorSeries::new(errors[..train_len].to_vec(), (0..train_len).collect()).stage(name)?;
        let test_idx: Vec<usize> = (train_len..set.len()).collect();
        let test_raw = ErrorSeries::new(errors[train_len..].to_vec(), test_idx.clone()).stage(name)?;
        let threshold = fit_threshold(&smooth(&train_raw, w).stage(name)?, self.cfg.k).stage(name)?;
        let test_smoothed = smooth(&test_raw, w).stage(name)?;
        let refractory_gap = self.cfg.eval.refractory_gap(set.config.hop_s());
        let detection = detect(&test_smoothed, &threshold, refractory_gap).stage(name)?;
        let result = evaluate(
            &set,
            &test_idx,
            &detection.flags,
            &detection.events,
            record.annotations(),
            &self.cfg.eval,
        )
        .stage(name)?;
        let times = test_idx.iter().map(|&i| set.span_s(i).0).collect();
        Ok(Analysis {
            patient_id: record.patient_id().to_string(),
            onsets: record.annotations().iter().map(|a| a.onset_s).collect(),
            times,
            train_len,
            refractory_gap,
            threshold,
            test_raw,
            test_smoothed,
            detection,
            result,
        })
    }
}

fn data(stage: &'static str, msg: impl Into<String>) -> CliError {
    CliError::Data {
        stage,
        msg: msg.into(),
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("artifact serializes");
    s.push('\n');
    s.into_bytes()
}

struct Analysis {
    patient_id: String,
    onsets: Vec<f64>,
    /// Start time of each held-out segment.
    times: Vec<f64>,
    train_len: usize,
    refractory_gap: usize,
    threshold: Threshold,
    test_raw: ErrorSeries,
    test_smoothed: ErrorSeries,
    detection: Detection,
    result: EvalResult,
}

impl Analysis {
    fn trace(&self, window_s: f64) -> Trace {
        Trace {
            title: format!("patient {}", self.patient_id),
            times_s: self.times.clone(),
            window_s,
            raw: self.test_raw.errors().to_vec(),
            smoothed: self.test_smoothed.errors().to_vec(),
            tau: self.threshold.tau,
            onsets_s: self.onsets.clone(),
            preictal_len_s: self.result.preictal_len_s,
            alarms: self
                .detection
                .events
                .iter()
                .map(|e: &AlarmEvent| {
                    let at = |i: usize| self.times[i - self.train_len];
                    (at(e.start_index), at(e.end_index) + window_s)
                })
                .collect(),
        }
    }
}

fn model_sidecar(m: &TrainedModel, baseline_segments: usize, limit_s: f64) -> serde_json::Value {
    let mut stats = Vec::with_capacity(16 * m.stats.mean.len());
    for v in m.stats.mean.iter().chain(&m.stats.std) {
        stats.extend_from_slice(&v.to_le_bytes());
    }
    json!({
        "architecture": m.spec.kind.as_str(),
        "representation": m.spec.representation.as_str(),
        "input_steps": m.spec.steps,
        "input_features": m.spec.features,
        "parameters": m.net.param_count(),
        "seed": m.plan.seed,
        "normalization_sha256": sha256_hex(&stats),
        "training": {
            "epochs": m.plan.epochs,
            "batch_size": m.plan.batch_size,
            "patience": m.plan.patience,
            "min_delta": m.plan.min_delta,
            "lr": m.plan.lr,
            "epochs_run": m.epoch_losses.len(),
            "best_epoch": m.best_epoch,
            "initial_loss": m.initial_loss,
            "final_loss": m.final_loss,
            "epoch_losses": m.epoch_losses,
        },
        "hyper": {
            "lstm_hidden": m.spec.hyper.lstm_hidden,
            "latent": m.spec.hyper.latent,
            "conv_channels": m.spec.hyper.conv_channels,
            "heads": m.spec.hyper.heads,
            "d_model": m.spec.hyper.d_model,
            "ff_inner": m.spec.hyper.ff_inner,
            "encoder_layers": m.spec.hyper.encoder_layers,
            "dropout": m.spec.hyper.dropout,
        },
        "baseline": { "segments": baseline_segments, "limit_s": limit_s },
    })
}

pub const SCORES_HEADER: &str = "segment_index,start_s,end_s,phase,split,raw_error";

fn scores_csv(set: &SegmentSet, baseline: usize, errors: &[f64]) -> String {
    let mut out = format!("{SCORES_HEADER}\n");
    for (i, e) in errors.iter().enumerate() {
        let (start, end) = set.span_s(i);
        let split = if i < baseline { "baseline" } else { "test" };
        out.push_str(&format!("{i},{start},{end},{},{split},{e}\n", set.segments[i].phase));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub index: usize,
    pub start_s: f64,
    pub phase: Phase,
    pub baseline: bool,
    pub error: f64,
}

pub fn parse_scores(text: &str) -> Result<Vec<ScoreRow>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(SCORES_HEADER) {
        return Err("unexpected header".into());
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |what: &str| format!("line {}: bad {what}", i + 2);
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 6 {
                return Err(bad("column count"));
            }
            Ok(ScoreRow {
                index: c[0].parse().map_err(|_| bad("segment_index"))?,
                start_s: c[1].parse().map_err(|_| bad("start_s"))?,
                phase: c[3].parse().map_err(|_| bad("phase"))?,
                baseline: match c[4] {
                    "baseline" => true,
                    "test" => false,
                    _ => return Err(bad("split")),
                },
                error: c[5].parse().map_err(|_| bad("raw_error"))?,
            })
        })
        .collect()
}

fn patient_metrics(patient_id: &str, r: &EvalResult) -> serde_json::Value {
    let mut v = serde_json::to_value(r).expect("result serializes");
    v.as_object_mut()
        .expect("result is an object")
        .insert("patient_id".into(), patient_id.into());
    v
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn metrics_csv(patient_id: &str, r: &EvalResult) -> String {
    let s = &r.segment;
    format!(
        "patient_id,accuracy,accuracy_unweighted,sensitivity,specificity,fpr_ratio,fpr_per_hour,\
         interictal_alarm_events,seizures_total,seizures_predicted,mean_prediction_time_min\n\
         {},{},{},{},{},{},{},{},{},{},{}\n",
        patient_id.replace(',', ";"),
        opt(s.accuracy),
        opt(s.accuracy_unweighted),
        opt(s.sensitivity),
        opt(s.specificity),
        opt(s.fpr_ratio),
        opt(s.fpr_per_hour),
        s.interictal_alarm_events,
        r.seizures_total,
        r.seizures_predicted,
        opt(r.mean_prediction_time_min),
    )
}
