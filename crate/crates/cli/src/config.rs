//! Plain-text `key = value` pipeline configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use preictal_core::evaluation::EvalConfig;
use preictal_core::features::Representation;
use preictal_core::models::{ArchitectureKind, BaselinePlan, Hyper, TrainPlan};
use preictal_core::preprocess::FilterConfig;

use crate::error::CliError;

/// Every recognised key with its default (`None` for keys without one).
pub const KEYS: &[(&str, Option<&str>)] = &[
    ("record", None),
    ("annotations", None),
    ("channel", Some("EKG")),
    ("patient_id", None),
    ("out", Some("out")),
    ("window_s", Some("1")),
    ("overlap_s", Some("0")),
    ("cutoff_hz", Some("40")),
    ("filter_order", Some("4")),
    ("zero_phase", Some("true")),
    ("representation", Some("spectrogram")),
    ("architecture", Some("mh_c_lstm_ae")),
    ("lstm_hidden", Some("64")),
    ("latent", Some("32")),
    ("conv_channels", Some("32")),
    ("heads", Some("4")),
    ("d_model", Some("64")),
    ("ff_inner", Some("128")),
    ("encoder_layers", Some("2")),
    ("dropout", Some("0.2")),
    ("epochs", Some("50")),
    ("batch_size", Some("32")),
    ("patience", Some("5")),
    ("min_delta", Some("1e-5")),
    ("lr", Some("1e-3")),
    ("seed", Some("0")),
    ("baseline_cap_s", Some("1800")),
    ("baseline_frac", Some("0.2")),
    ("min_baseline_s", Some("60")),
    ("smoothing_w", Some("31")),
    ("k", Some("2")),
    ("preictal_len_s", Some("auto")),
    ("postictal_len_s", Some("600")),
    ("refractory_s", Some("60")),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub record: PathBuf,
    pub annotations: Option<PathBuf>,
    pub channel: String,
    pub patient_id: Option<String>,
    pub out: PathBuf,
    pub window_s: u32,
    pub overlap_s: u32,
    pub filter: FilterConfig,
    pub representation: Representation,
    pub architecture: ArchitectureKind,
    pub hyper: Hyper,
    pub train: TrainPlan,
    pub baseline: BaselinePlan,
    pub smoothing_w: usize,
    pub k: f64,
    pub eval: EvalConfig,
    /// Canonical `key = value` lines after defaults, in [`KEYS`] order.
    values: BTreeMap<&'static str, String>,
}

fn field(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse::<T>().map_err(|_| field(key, format!("{v:?} is not a valid value")))
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(field(key, format!("must be positive, got {v}")))
    }
}

impl PipelineConfig {
    /// Parses config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut given: BTreeMap<&'static str, String> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let k = k.trim();
            let key = KEYS
                .iter()
                .find(|(name, _)| *name == k)
                .map(|(name, _)| *name)
                .ok_or_else(|| CliError::Config(format!("line {}: unknown key `{k}`", i + 1)))?;
            if given.insert(key, v.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: key `{k}` given twice", i + 1)));
            }
        }
        let mut values = BTreeMap::new();
        for (key, default) in KEYS {
            if let Some(v) = given.remove(key).or(default.map(str::to_string)) {
                values.insert(*key, v);
            }
        }
        Self::from_values(values, base_dir)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    fn from_values(values: BTreeMap<&'static str, String>, base_dir: &Path) -> Result<Self, CliError> {
        let get = |k: &str| values.get(k).map(String::as_str);
        let req = |k: &str| get(k).ok_or_else(|| field(k, "required"));
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        let window_s: u32 = num("window_s", req("window_s")?)?;
        let overlap_s: u32 = num("overlap_s", req("overlap_s")?)?;
        if window_s == 0 {
            return Err(field("window_s", "must be positive"));
        }
        if overlap_s >= window_s {
            return Err(field(
                "overlap_s",
                format!("must be smaller than window_s ({overlap_s} >= {window_s})"),
            ));
        }
        let filter = FilterConfig {
            cutoff_hz: positive("cutoff_hz", num("cutoff_hz", req("cutoff_hz")?)?)?,
            order: num("filter_order", req("filter_order")?)?,
            zero_phase: num("zero_phase", req("zero_phase")?)?,
        };
        if filter.order == 0 {
            return Err(field("filter_order", "must be at least 1"));
        }
        let representation = req("representation")?.parse().map_err(|e| field("representation", e))?;
        let architecture = req("architecture")?.parse().map_err(|e| field("architecture", e))?;
        let hyper = Hyper {
            lstm_hidden: num("lstm_hidden", req("lstm_hidden")?)?,
            latent: num("latent", req("latent")?)?,
            conv_channels: num("conv_channels", req("conv_channels")?)?,
            heads: num("heads", req("heads")?)?,
            d_model: num("d_model", req("d_model")?)?,
            ff_inner: num("ff_inner", req("ff_inner")?)?,
            encoder_layers: num("encoder_layers", req("encoder_layers")?)?,
            dropout: num("dropout", req("dropout")?)?,
        };
        for (k, v) in [
            ("lstm_hidden", hyper.lstm_hidden),
            ("latent", hyper.latent),
            ("conv_channels", hyper.conv_channels),
            ("heads", hyper.heads),
            ("d_model", hyper.d_model),
            ("ff_inner", hyper.ff_inner),
            ("encoder_layers", hyper.encoder_layers),
        ] {
            if v == 0 {
                return Err(field(k, "must be positive"));
            }
        }
        if !(0.0..1.0).contains(&hyper.dropout) {
            return Err(field("dropout", format!("must lie in [0, 1), got {}", hyper.dropout)));
        }
        let divides = |k: &str, dim: usize| {
            if dim % hyper.heads != 0 {
                Err(field(k, format!("{dim} is not divisible by heads = {}", hyper.heads)))
            } else {
                Ok(())
            }
        };
        match architecture {
            ArchitectureKind::MhCLstmAe => divides("lstm_hidden", hyper.lstm_hidden)?,
            ArchitectureKind::TEe => divides("d_model", hyper.d_model)?,
            ArchitectureKind::LstmAe => {}
        }
        let train = TrainPlan {
            epochs: num("epochs", req("epochs")?)?,
            batch_size: num("batch_size", req("batch_size")?)?,
            patience: num("patience", req("patience")?)?,
            min_delta: num("min_delta", req("min_delta")?)?,
            lr: positive("lr", num("lr", req("lr")?)?)?,
            seed: num("seed", req("seed")?)?,
        };
        if train.epochs == 0 {
            return Err(field("epochs", "must be positive"));
        }
        if train.batch_size == 0 {
            return Err(field("batch_size", "must be positive"));
        }
        if !(train.min_delta >= 0.0) {
            return Err(field("min_delta", "must be nonnegative"));
        }
        let baseline = BaselinePlan {
            cap_s: positive("baseline_cap_s", num("baseline_cap_s", req("baseline_cap_s")?)?)?,
            fraction: num("baseline_frac", req("baseline_frac")?)?,
            min_s: num("min_baseline_s", req("min_baseline_s")?)?,
        };
        if !(baseline.fraction > 0.0 && baseline.fraction <= 1.0) {
            return Err(field("baseline_frac", format!("must lie in (0, 1], got {}", baseline.fraction)));
        }
        if !(baseline.min_s >= 0.0) {
            return Err(field("min_baseline_s", "must be nonnegative"));
        }
        let smoothing_w: usize = num("smoothing_w", req("smoothing_w")?)?;
        if smoothing_w == 0 || smoothing_w % 2 == 0 {
            return Err(field("smoothing_w", format!("must be odd and positive, got {smoothing_w}")));
        }
        let k: f64 = num("k", req("k")?)?;
        if !(k.is_finite() && k >= 0.0) {
            return Err(field("k", format!("must be finite and nonnegative, got {k}")));
        }
        let pre = req("preictal_len_s")?;
        let eval = EvalConfig {
            preictal_len_s: if pre == "auto" {
                None
            } else {
                Some(positive("preictal_len_s", num("preictal_len_s", pre)?)?)
            },
            postictal_len_s: num("postictal_len_s", req("postictal_len_s")?)?,
            refractory_s: num("refractory_s", req("refractory_s")?)?,
        };
        if !(eval.postictal_len_s >= 0.0) {
            return Err(field("postictal_len_s", "must be nonnegative"));
        }
        if !(eval.refractory_s >= 0.0) {
            return Err(field("refractory_s", "must be nonnegative"));
        }
        Ok(Self {
            record: resolve(req("record")?),
            annotations: get("annotations").map(resolve),
            channel: req("channel")?.to_string(),
            patient_id: get("patient_id").map(str::to_string),
            out: resolve(req("out")?),
            window_s,
            overlap_s,
            filter,
            representation,
            architecture,
            hyper,
            train,
            baseline,
            smoothing_w,
            k,
            eval,
            values,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.train.seed = seed;
        self.values.insert("seed", seed.to_string());
        self
    }

    pub fn with_out(mut self, out: PathBuf) -> Self {
        self.values.insert("out", out.display().to_string());
        self.out = out;
        self
    }

    /// Value of `key` after defaults, as written in the config.
    pub fn value(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// `key = value` lines for the given keys; missing optional keys are rendered empty.
    pub fn render_keys(&self, keys: &[&str]) -> String {
        keys.iter()
            .map(|k| format!("{k} = {}\n", self.value(k).unwrap_or("")))
            .collect()
    }

    /// Every key after defaults, in documentation order.
    pub fn render(&self) -> String {
        let keys: Vec<&str> = KEYS.iter().map(|(k, _)| *k).collect();
        self.render_keys(&keys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PipelineConfig, CliError> {
        PipelineConfig::parse(text, Path::new("/data"))
    }

    #[test]
    fn minimal_config_materializes_defaults() {
        let c = parse("record = rec.edf\nannotations = rec.csv\n").unwrap();
        assert_eq!(c.record, PathBuf::from("/data/rec.edf"));
        assert_eq!(c.annotations, Some(PathBuf::from("/data/rec.csv")));
        assert_eq!(c.k, 2.0);
        assert_eq!((c.window_s, c.overlap_s), (1, 0));
        assert_eq!(c.filter, FilterConfig::default());
        assert_eq!(c.representation, Representation::Spectrogram);
        assert_eq!(c.architecture, ArchitectureKind::MhCLstmAe);
        assert_eq!(c.hyper, Hyper::default());
        assert_eq!(c.train, TrainPlan::default());
        assert_eq!(c.baseline, BaselinePlan::default());
        assert_eq!(c.eval, EvalConfig::default());
        assert_eq!(c.smoothing_w, 31);
        assert_eq!(c.out, PathBuf::from("/data/out"));
        for (key, default) in KEYS {
            if let Some(d) = default {
                assert_eq!(c.value(key), Some(*d), "{key}");
            }
        }
    }

    #[test]
    fn overlap_not_below_window_is_rejected() {
        let err = parse("record = r.edf\noverlap_s = 5\nwindow_s = 1\n").unwrap_err();
        assert!(err.to_string().contains("overlap_s"), "{err}");
    }

    #[test]
    fn unknown_and_malformed_keys() {
        let err = parse("record = r.edf\nwindow = 5\n").unwrap_err();
        assert!(err.to_string().contains("unknown key `window`"), "{err}");
        assert!(parse("record r.edf").is_err());
        assert!(parse("record = a\nrecord = b").is_err());
        assert!(parse("window_s = 1").unwrap_err().to_string().contains("record"));
    }

    #[test]
    fn field_precise_value_errors() {
        for (text, key) in [
            ("representation = wavelet", "representation"),
            ("architecture = cnn", "architecture"),
            ("smoothing_w = 4", "smoothing_w"),
            ("k = -1", "k"),
            ("dropout = 1.5", "dropout"),
            ("heads = 3", "lstm_hidden"),
            ("zero_phase = maybe", "zero_phase"),
            ("preictal_len_s = 0", "preictal_len_s"),
        ] {
            let err = parse(&format!("record = r.edf\n{text}\n")).unwrap_err();
            assert!(err.to_string().starts_with(&format!("invalid configuration: {key}")), "{text}: {err}");
        }
    }

    #[test]
    fn comments_overrides_and_render() {
        let c = parse("# header\nrecord = /abs/r.edf # trailing\npreictal_len_s = 3600\n")
            .unwrap()
            .with_seed(9)
            .with_out(PathBuf::from("/tmp/x"));
        assert_eq!(c.record, PathBuf::from("/abs/r.edf"));
        assert_eq!(c.eval.preictal_len_s, Some(3600.0));
        assert_eq!(c.train.seed, 9);
        assert!(c.render().contains("seed = 9\n"));
        assert_eq!(c.render().lines().count(), KEYS.len());
    }
}
