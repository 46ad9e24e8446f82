use preictal_core::features::{
    cwt_scalogram, dwt_decompose, dwt_reconstruct, mexh, reflect_index, stft_spectrogram, WaveletFilterBank,
    WindowKind, SCALES, TIME_STRIDE,
};
use proptest::prelude::*;

fn segment() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 512)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dwt_reconstructs(x in segment()) {
        let bank = WaveletFilterBank::sym4();
        let y = dwt_reconstruct(&dwt_decompose(&x, &bank, 3).unwrap(), &bank);
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn dwt_preserves_energy(x in segment()) {
        let d = dwt_decompose(&x, &WaveletFilterBank::sym4(), 3).unwrap();
        let e_in: f64 = x.iter().map(|v| v * v).sum();
        let e_out: f64 = d.vector().iter().map(|v| v * v).sum();
        prop_assert!((e_in - e_out).abs() <= 1e-9 * e_in.max(1.0));
    }

    #[test]
    fn dwt_ramp_details_vanish_away_from_the_wrap(offset in -3.0f64..3.0, slope in -0.05f64..0.05) {
        let x: Vec<f64> = (0..512).map(|i| offset + slope * i as f64).collect();
        let d = dwt_decompose(&x, &WaveletFilterBank::sym4(), 3).unwrap();
        for level in &d.details {
            for v in &level[8..level.len() - 8] {
                prop_assert!(v.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rectangular_stft_satisfies_parseval(x in segment()) {
        let s = stft_spectrogram(&x, WindowKind::Rectangular);
        for f in 0..s.frames {
            let energy: f64 = (0..512)
                .map(|j| x[reflect_index((f * 128 + j) as isize - 256, x.len())].powi(2))
                .sum();
            let spectral = s.at(f, 0) + s.at(f, 256) + 2.0 * (1..256).map(|k| s.at(f, k)).sum::<f64>();
            prop_assert!((spectral / 512.0 - energy).abs() <= 1e-6 * energy.max(1e-12));
        }
    }

    #[test]
    fn scaled_input_scales_scalogram_quadratically(x in segment(), alpha in -4.0f64..4.0) {
        let base = cwt_scalogram(&x);
        let scaled = cwt_scalogram(&x.iter().map(|v| alpha * v).collect::<Vec<_>>());
        for (a, b) in base.values.iter().zip(&scaled.values) {
            prop_assert!((alpha * alpha * a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn sine_energy_lands_in_its_bin() {
    for freq in [8usize, 40, 64, 200] {
        let x: Vec<f64> = (0..2560)
            .map(|i| (2.0 * std::f64::consts::PI * freq as f64 * i as f64 / 512.0).cos())
            .collect();
        let s = stft_spectrogram(&x, WindowKind::Hann);
        let f = s.frames / 2;
        let peak = (0..s.bins).max_by(|&a, &b| s.at(f, a).total_cmp(&s.at(f, b))).unwrap();
        assert_eq!(peak, freq);
    }
}

/// Continuous-time transform of a Gaussian bump, by trapezoid quadrature.
fn bump_response(scale: f64, width: f64) -> f64 {
    let h = 0.01;
    let reach = 12.0 * scale.max(width);
    let n = (2.0 * reach / h) as usize;
    let sum: f64 = (0..=n)
        .map(|i| {
            let u = -reach + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * (-0.5 * (u / width).powi(2)).exp() * mexh(u / scale)
        })
        .sum();
    sum * h / scale.sqrt()
}

#[test]
fn bump_peak_scale_matches_quadrature() {
    for width in [4.0, 8.0, 15.0] {
        let x: Vec<f64> = (0..512).map(|i| (-0.5 * ((i as f64 - 256.0) / width).powi(2)).exp()).collect();
        let s = cwt_scalogram(&x);
        let col = 256 / TIME_STRIDE;
        let ours = (0..SCALES).max_by(|&a, &b| s.at(a, col).total_cmp(&s.at(b, col))).unwrap() + 1;
        let oracle = (1..=SCALES)
            .max_by(|&a, &b| bump_response(a as f64, width).abs().total_cmp(&bump_response(b as f64, width).abs()))
            .unwrap();
        assert!(ours.abs_diff(oracle) <= 2, "width {width}: {ours} vs {oracle}");
        // The response peaks at sqrt(5) times the bump width in closed form.
        assert!((oracle as f64 - 5f64.sqrt() * width).abs() <= 1.0, "width {width}: {oracle}");
    }
}
