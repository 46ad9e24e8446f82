use preictal_nn::{
    mse_loss, Adam, AdamConfig, BatchNorm, Conv1d, Dense, Dropout, Layer, Lstm, Mode,
    MultiHeadAttention, NnError, Rng, Sequential, Tensor,
};

fn random_tensor(shape: &[usize], rng: &mut Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.normal()).collect()).unwrap()
}

#[test]
fn dense_identity_passes_input_through() {
    let mut rng = Rng::new(0);
    let mut dense = Dense::new(4, 4, &mut rng);
    dense.weight.value.fill(0.0);
    for i in 0..4 {
        dense.weight.value[i * 4 + i] = 1.0;
    }
    let x = random_tensor(&[2, 3, 4], &mut rng);
    let y = dense.forward(&x, Mode::Infer, &mut rng).unwrap();
    assert_eq!(y, x);
}

#[test]
fn dropout_inference_is_exact_pass_through() {
    let mut rng = Rng::new(1);
    let mut d = Dropout::new(0.2).unwrap();
    let x = random_tensor(&[3, 5, 7], &mut rng);
    assert_eq!(d.forward(&x, Mode::Infer, &mut rng).unwrap(), x);
}

#[test]
fn dropout_training_scales_kept_units() {
    let mut rng = Rng::new(2);
    let mut d = Dropout::new(0.2).unwrap();
    let x = Tensor::filled(&[1, 1000, 10], 1.0);
    let y = d.forward(&x, Mode::Train, &mut rng).unwrap();
    let kept = y.data().iter().filter(|&&v| v != 0.0).count();
    assert!(y.data().iter().all(|&v| v == 0.0 || (v - 1.25).abs() < 1e-15));
    let frac = kept as f64 / y.len() as f64;
    assert!((frac - 0.8).abs() < 0.02, "{frac}");
}

#[test]
fn attention_rows_sum_to_one() {
    let mut rng = Rng::new(3);
    let mut mha = MultiHeadAttention::new(16, 4, &mut rng).unwrap();
    let x = random_tensor(&[2, 9, 16], &mut rng);
    mha.forward(&x, Mode::Infer, &mut rng).unwrap();
    let probs = mha.last_attention();
    assert_eq!(probs.len(), 2 * 4 * 9 * 9);
    for row in probs.chunks_exact(9) {
        let s: f64 = row.iter().sum();
        assert!((s - 1.0).abs() < 1e-12, "{s}");
        assert!(row.iter().all(|&p| p >= 0.0));
    }
}

#[test]
fn attention_rejects_indivisible_heads() {
    let mut rng = Rng::new(0);
    assert!(matches!(
        MultiHeadAttention::new(10, 4, &mut rng),
        Err(NnError::InvalidConfig(_))
    ));
}

#[test]
fn conv_same_padding_preserves_steps() {
    let mut rng = Rng::new(4);
    for dilation in [1, 2, 4] {
        for steps in [1, 3, 5, 32] {
            let mut conv = Conv1d::new(3, 6, 3, dilation, &mut rng).unwrap();
            let x = random_tensor(&[2, steps, 3], &mut rng);
            let y = conv.forward(&x, Mode::Train, &mut rng).unwrap();
            assert_eq!(y.shape(), &[2, steps, 6]);
            let dx = conv.backward(&y).unwrap();
            assert_eq!(dx.shape(), x.shape());
        }
    }
}

#[test]
fn shape_mismatch_names_both_shapes() {
    let mut rng = Rng::new(5);
    let mut dense = Dense::new(4, 2, &mut rng);
    let x = Tensor::zeros(&[1, 2, 3]);
    let err = dense.forward(&x, Mode::Infer, &mut rng).unwrap_err();
    match err {
        NnError::ShapeMismatch { expected, got, .. } => {
            assert_eq!(expected, vec![1, 2, 4]);
            assert_eq!(got, vec![1, 2, 3]);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn backward_before_forward_is_an_error() {
    let mut rng = Rng::new(6);
    let mut layers: Vec<Layer> = vec![
        Dense::new(3, 3, &mut rng).into(),
        Lstm::new(3, 3, &mut rng).into(),
        BatchNorm::new(3).into(),
        Dropout::new(0.1).unwrap().into(),
    ];
    let g = Tensor::zeros(&[1, 2, 3]);
    for l in &mut layers {
        assert!(matches!(l.backward(&g), Err(NnError::BackwardBeforeForward(_))));
    }
    // An inference pass saves nothing either.
    let mut lstm = Lstm::new(3, 3, &mut rng);
    lstm.forward(&g, Mode::Infer, &mut rng).unwrap();
    assert!(lstm.backward(&g).is_err());
}

fn small_net(seed: u64) -> Sequential {
    let mut rng = Rng::new(seed);
    Sequential::new(vec![
        Lstm::new(3, 8, &mut rng).into(),
        BatchNorm::new(8).into(),
        Dropout::new(0.2).unwrap().into(),
        Dense::new(8, 3, &mut rng).into(),
    ])
}

#[test]
fn zero_output_grad_gives_zero_param_grads() {
    let mut net = small_net(7);
    let mut rng = Rng::new(8);
    let x = random_tensor(&[4, 5, 3], &mut rng);
    let y = net.forward(&x, Mode::Train, &mut rng).unwrap();
    net.zero_grad();
    net.backward(&Tensor::zeros(y.shape())).unwrap();
    assert!(net.params().iter().all(|p| p.grad.iter().all(|&g| g == 0.0)));
}

#[test]
fn mse_on_identical_gives_zero_gradients() {
    let mut net = small_net(9);
    let mut rng = Rng::new(10);
    let x = random_tensor(&[4, 5, 3], &mut rng);
    let y = net.forward(&x, Mode::Train, &mut rng).unwrap();
    let (loss, grad) = mse_loss(&y, &y).unwrap();
    assert_eq!(loss, 0.0);
    net.zero_grad();
    net.backward(&grad).unwrap();
    assert!(net.params().iter().all(|p| p.grad.iter().all(|&g| g == 0.0)));
}

fn train(seed: u64, steps: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut net = small_net(seed);
    let mut data_rng = Rng::new(1234);
    let x = random_tensor(&[8, 6, 3], &mut data_rng);
    let mut rng = Rng::new(seed ^ 0xabc);
    let mut adam = Adam::new(AdamConfig::default());
    let mut losses = Vec::new();
    for _ in 0..steps {
        let y = net.forward(&x, Mode::Train, &mut rng).unwrap();
        let (loss, g) = mse_loss(&y, &x).unwrap();
        losses.push(loss);
        net.zero_grad();
        net.backward(&g).unwrap();
        adam.step(&mut net.params_mut()).unwrap();
    }
    (net.params().iter().map(|p| p.value.clone()).collect(), losses)
}

#[test]
fn fixed_seed_training_is_bit_identical() {
    let (a, la) = train(3, 20);
    let (b, lb) = train(3, 20);
    let bits = |v: &Vec<Vec<f64>>| -> Vec<u64> { v.iter().flatten().map(|x| x.to_bits()).collect() };
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(la, lb);
}

#[test]
fn different_seeds_differ_but_stay_finite() {
    let (a, la) = train(3, 5);
    let (b, lb) = train(4, 5);
    assert_ne!(a, b);
    assert!(la.iter().chain(&lb).all(|l| l.is_finite()));
}

#[test]
fn forward_stays_finite_on_large_inputs() {
    let mut net = small_net(11);
    let x = Tensor::filled(&[2, 4, 3], 1e3);
    let mut rng = Rng::new(0);
    assert!(net.forward(&x, Mode::Train, &mut rng).unwrap().all_finite());
    assert!(net.forward(&x, Mode::Infer, &mut rng).unwrap().all_finite());
}

#[test]
fn state_roundtrip_includes_running_buffers() {
    let mut a = small_net(12);
    let mut rng = Rng::new(0);
    let x = random_tensor(&[4, 5, 3], &mut rng);
    a.forward(&x, Mode::Train, &mut rng).unwrap();
    let names: Vec<String> = a.state().iter().map(|s| s.name.clone()).collect();
    assert!(names.iter().any(|n| n.ends_with("running_mean")));
    let values: Vec<Vec<f64>> = a.state().iter().map(|s| s.value.to_vec()).collect();
    let mut b = small_net(13);
    for (s, v) in b.state_mut().into_iter().zip(&values) {
        *s.value = v.clone();
    }
    let ya = a.forward(&x, Mode::Infer, &mut rng).unwrap();
    let yb = b.forward(&x, Mode::Infer, &mut rng).unwrap();
    assert_eq!(ya, yb);
}
