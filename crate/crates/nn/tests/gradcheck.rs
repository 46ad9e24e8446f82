//! Central finite-difference checks (step 1e-5) of every layer's backward pass.

use preictal_nn::gradcheck::gradcheck;
use preictal_nn::{
    BatchNorm, Conv1d, Dense, Dropout, FeedForward, Layer, LayerNorm, Lstm,
    MultiHeadAttention, PositionalEncoding, Residual, Rng, Sequential,
};

const TOL: f64 = 1e-4;

fn check(net: Sequential, input_shape: &[usize], seed: u64) -> f64 {
    let g = gradcheck(net, input_shape, seed).unwrap();
    for (name, e) in &g.params {
        assert!(*e < TOL, "param {name}: rel error {e}");
    }
    g.worst()
}

fn seq(layers: Vec<Layer>) -> Sequential {
    Sequential::new(layers)
}

#[test]
fn dense() {
    let mut rng = Rng::new(1);
    let e = check(seq(vec![Dense::new(7, 5, &mut rng).into()]), &[2, 3, 7], 11);
    assert!(e < TOL, "{e}");
}

#[test]
fn conv1d_each_dilation() {
    for dilation in [1, 2, 4] {
        let mut rng = Rng::new(2);
        let conv = Conv1d::new(4, 5, 3, dilation, &mut rng).unwrap();
        let e = check(seq(vec![conv.into()]), &[2, 7, 4], 12);
        assert!(e < TOL, "dilation {dilation}: {e}");
    }
}

#[test]
fn lstm_three_steps() {
    let mut rng = Rng::new(3);
    let e = check(seq(vec![Lstm::new(5, 4, &mut rng).into()]), &[2, 3, 5], 13);
    assert!(e < TOL, "{e}");
}

#[test]
fn multi_head_attention() {
    let mut rng = Rng::new(4);
    let mha = MultiHeadAttention::new(8, 4, &mut rng).unwrap();
    let e = check(seq(vec![mha.into()]), &[2, 5, 8], 14);
    assert!(e < TOL, "{e}");
}

#[test]
fn batch_norm_train_mode() {
    let e = check(seq(vec![BatchNorm::new(5).into()]), &[4, 3, 5], 15);
    assert!(e < TOL, "{e}");
}

#[test]
fn layer_norm() {
    let e = check(seq(vec![LayerNorm::new(7).into()]), &[2, 5, 7], 16);
    assert!(e < TOL, "{e}");
}

#[test]
fn feed_forward() {
    let mut rng = Rng::new(5);
    let e = check(seq(vec![FeedForward::new(5, 10, &mut rng).into()]), &[2, 3, 5], 17);
    assert!(e < TOL, "{e}");
}

#[test]
fn dropout_with_fixed_mask() {
    let mut rng = Rng::new(6);
    let e = check(
        seq(vec![Dense::new(5, 6, &mut rng).into(), Dropout::new(0.2).unwrap().into()]),
        &[2, 3, 5],
        18,
    );
    assert!(e < TOL, "{e}");
}

#[test]
fn transformer_block_stack() {
    let mut rng = Rng::new(7);
    let dim = 8;
    let block = seq(vec![
        PositionalEncoding::new(dim).into(),
        Residual::new(vec![
            MultiHeadAttention::new(dim, 4, &mut rng).unwrap().into(),
            Dropout::new(0.2).unwrap().into(),
        ])
        .into(),
        LayerNorm::new(dim).into(),
        Residual::new(vec![
            FeedForward::new(dim, 2 * dim, &mut rng).into(),
            Dropout::new(0.2).unwrap().into(),
        ])
        .into(),
        LayerNorm::new(dim).into(),
    ]);
    let e = check(block, &[2, 4, dim], 19);
    assert!(e < TOL, "{e}");
}

#[test]
fn recurrent_autoencoder_stack() {
    let mut rng = Rng::new(8);
    let net = seq(vec![
        Conv1d::new(3, 4, 3, 2, &mut rng).unwrap().into(),
        preictal_nn::layers::Relu::new().into(),
        Lstm::new(4, 6, &mut rng).into(),
        BatchNorm::new(6).into(),
        Lstm::new(6, 3, &mut rng).into(),
        Dense::new(3, 3, &mut rng).into(),
    ]);
    let e = check(net, &[4, 3, 3], 20);
    assert!(e < TOL, "{e}");
}
