use preictal_core::cache::encode_model;
use preictal_core::features::{extract_features, FeatureSet, Representation};
use preictal_core::ingest::{generate_synthetic, SyntheticEvent, SyntheticSpec};
use preictal_core::models::{build, score, train, ArchitectureKind, Hyper, TrainPlan, TrainedModel};
use preictal_core::preprocess::{lowpass, segment, FilterConfig, SegmentSet, SegmentationConfig};

fn small() -> Hyper {
    Hyper {
        lstm_hidden: 16,
        latent: 8,
        conv_channels: 8,
        heads: 2,
        d_model: 16,
        ff_inner: 32,
        encoder_layers: 1,
        dropout: 0.1,
    }
}

fn segments(spec: &SyntheticSpec) -> SegmentSet {
    let record = lowpass(&generate_synthetic(spec).unwrap(), &FilterConfig::default()).unwrap();
    segment(&record, &SegmentationConfig::new(1, 0, 512).unwrap()).unwrap()
}

fn fit(kind: ArchitectureKind, features: &FeatureSet, upto: usize, plan: &TrainPlan) -> TrainedModel {
    let arch = build(kind, features.representation, features.steps, features.features, small()).unwrap();
    let idx: Vec<usize> = (0..upto).collect();
    train(&arch, &features.select(&idx), plan).unwrap()
}

fn plan(epochs: usize, seed: u64) -> TrainPlan {
    TrainPlan {
        epochs,
        seed,
        ..TrainPlan::default()
    }
}

#[test]
fn fixed_seed_reproduces_parameters() {
    let set = segments(&SyntheticSpec {
        duration_s: 64.0,
        base_hr_bpm: 67.3,
        ..SyntheticSpec::default()
    });
    let features = extract_features(&set, Representation::Dwt).unwrap();
    for kind in ArchitectureKind::ALL {
        let a = encode_model(&fit(kind, &features, 64, &plan(3, 9)));
        let b = encode_model(&fit(kind, &features, 64, &plan(3, 9)));
        let c = encode_model(&fit(kind, &features, 64, &plan(3, 10)));
        assert!(a == b, "{kind}");
        assert!(a != c, "{kind}");
    }
}

#[test]
fn scores_agree_with_training_loss() {
    let set = segments(&SyntheticSpec {
        duration_s: 64.0,
        base_hr_bpm: 67.3,
        ..SyntheticSpec::default()
    });
    let features = extract_features(&set, Representation::Spectrogram).unwrap();
    let model = fit(ArchitectureKind::LstmAe, &features, 64, &plan(5, 0));
    let idx: Vec<usize> = (0..64).collect();
    let errors = score(&model, &features, &idx).unwrap();
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    assert!((mean - model.final_loss).abs() <= 1e-9 * model.final_loss, "{mean} vs {}", model.final_loss);

    // Scoring is per segment: repeats and reordering do not change a segment's error.
    let again = score(&model, &features, &[5, 5, 2, 5]).unwrap();
    assert_eq!(again, vec![errors[5], errors[5], errors[2], errors[5]]);

    let mut zeros = features.clone();
    zeros.data[0].iter_mut().for_each(|v| *v = 0.0);
    assert!(score(&model, &zeros, &[0]).unwrap()[0] > 0.0);
}

#[test]
fn perturbed_rhythm_reconstructs_worse() {
    let spec = SyntheticSpec {
        duration_s: 900.0,
        base_hr_bpm: 67.3,
        events: vec![SyntheticEvent::new(780.0, 420.0, 30.0, 0.2)],
        ..SyntheticSpec::default()
    };
    let set = segments(&spec);
    let features = extract_features(&set, Representation::Spectrogram).unwrap();
    let model = fit(ArchitectureKind::LstmAe, &features, 300, &plan(15, 0));
    let mean = |r: std::ops::Range<usize>| {
        let idx: Vec<usize> = r.collect();
        let e = score(&model, &features, &idx).unwrap();
        e.iter().sum::<f64>() / e.len() as f64
    };
    let quiet = mean(300..360);
    let lead = mean(660..780);
    assert!(lead > 2.0 * quiet, "lead {lead} vs quiet {quiet}");
}
