//! The three reconstruction architectures and their layer stacks.

use std::fmt;
use std::str::FromStr;

use preictal_nn::{
    BatchNorm, Conv1d, Dense, Dropout, FeedForward, LayerNorm, Lstm, MultiHeadAttention, PositionalEncoding,
    Relu, Residual, Rng, Sequential,
};

use crate::error::{Error, Result};
use crate::features::Representation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArchitectureKind {
    /// Recurrent autoencoder.
    LstmAe,
    /// Dilated convolutions, recurrent layer and multi-head attention, mirrored.
    MhCLstmAe,
    /// Transformer encoder with a linear reconstruction head.
    TEe,
}

impl ArchitectureKind {
    pub const ALL: [ArchitectureKind; 3] = [ArchitectureKind::LstmAe, ArchitectureKind::MhCLstmAe, ArchitectureKind::TEe];

    pub fn as_str(self) -> &'static str {
        match self {
            ArchitectureKind::LstmAe => "lstm_ae",
            ArchitectureKind::MhCLstmAe => "mh_c_lstm_ae",
            ArchitectureKind::TEe => "t_ee",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            ArchitectureKind::LstmAe => 0,
            ArchitectureKind::MhCLstmAe => 1,
            ArchitectureKind::TEe => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for ArchitectureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchitectureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "lstm_ae" => Ok(ArchitectureKind::LstmAe),
            "mh_c_lstm_ae" => Ok(ArchitectureKind::MhCLstmAe),
            "t_ee" => Ok(ArchitectureKind::TEe),
            other => Err(format!(
                "unknown architecture {other:?} (expected lstm_ae, mh_c_lstm_ae or t_ee)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    pub lstm_hidden: usize,
    pub latent: usize,
    pub conv_channels: usize,
    pub heads: usize,
    pub d_model: usize,
    pub ff_inner: usize,
    pub encoder_layers: usize,
    pub dropout: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            lstm_hidden: 64,
            latent: 32,
            conv_channels: 32,
            heads: 4,
            d_model: 64,
            ff_inner: 128,
            encoder_layers: 2,
            dropout: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArchitectureSpec {
    pub kind: ArchitectureKind,
    pub representation: Representation,
    pub steps: usize,
    pub features: usize,
    pub hyper: Hyper,
}

pub const CONV_KERNEL: usize = 3;
pub const DILATIONS: [usize; 3] = [1, 2, 4];

pub fn build(
    kind: ArchitectureKind,
    representation: Representation,
    steps: usize,
    features: usize,
    hyper: Hyper,
) -> Result<ArchitectureSpec> {
    let bad = |m: String| Err(Error::Config(m));
    if steps == 0 || features == 0 {
        return bad(format!("input layout {steps} x {features} is empty"));
    }
    let h = hyper;
    if [h.lstm_hidden, h.latent, h.conv_channels, h.heads, h.d_model, h.ff_inner].contains(&0) {
        return bad("layer widths and head count must be positive".into());
    }
    if !(0.0..1.0).contains(&h.dropout) {
        return bad(format!("dropout {} must lie in [0, 1)", h.dropout));
    }
    match kind {
        ArchitectureKind::MhCLstmAe if h.lstm_hidden % h.heads != 0 => {
            return bad(format!("lstm_hidden {} is not divisible by heads {}", h.lstm_hidden, h.heads));
        }
        ArchitectureKind::TEe if h.d_model % h.heads != 0 => {
            return bad(format!("d_model {} is not divisible by heads {}", h.d_model, h.heads));
        }
        ArchitectureKind::TEe if h.encoder_layers == 0 => {
            return bad("encoder_layers must be at least 1".into());
        }
        _ => {}
    }
    Ok(ArchitectureSpec {
        kind,
        representation,
        steps,
        features,
        hyper,
    })
}

impl ArchitectureSpec {
    /// Fresh layer stack with weights drawn from `rng`.
    pub fn instantiate(&self, rng: &mut Rng) -> Result<Sequential> {
        let h = self.hyper;
        let f = self.features;
        let mut net = Sequential::default();
        let drop = || Dropout::new(h.dropout);
        match self.kind {
            ArchitectureKind::LstmAe => {
                net.push(Lstm::new(f, h.lstm_hidden, rng));
                net.push(BatchNorm::new(h.lstm_hidden));
                net.push(drop()?);
                net.push(Lstm::new(h.lstm_hidden, h.latent, rng));
                net.push(Lstm::new(h.latent, h.lstm_hidden, rng));
                net.push(BatchNorm::new(h.lstm_hidden));
                net.push(drop()?);
                net.push(Dense::new(h.lstm_hidden, f, rng));
            }
            ArchitectureKind::MhCLstmAe => {
                let c = h.conv_channels;
                let mut inputs = f;
                for d in DILATIONS {
                    net.push(Conv1d::new(inputs, c, CONV_KERNEL, d, rng)?);
                    net.push(Relu::new());
                    inputs = c;
                }
                net.push(BatchNorm::new(c));
                net.push(drop()?);
                net.push(Lstm::new(c, h.lstm_hidden, rng));
                net.push(Residual::new(vec![MultiHeadAttention::new(h.lstm_hidden, h.heads, rng)?.into()]));
                net.push(Dense::new(h.lstm_hidden, h.latent, rng));
                net.push(Dense::new(h.latent, h.lstm_hidden, rng));
                net.push(Residual::new(vec![MultiHeadAttention::new(h.lstm_hidden, h.heads, rng)?.into()]));
                net.push(Lstm::new(h.lstm_hidden, c, rng));
                for (i, d) in DILATIONS.iter().rev().enumerate() {
                    let last = i == DILATIONS.len() - 1;
                    net.push(Conv1d::new(c, if last { f } else { c }, CONV_KERNEL, *d, rng)?);
                    if !last {
                        net.push(Relu::new());
                    }
                }
            }
            ArchitectureKind::TEe => {
                let d = h.d_model;
                net.push(Dense::new(f, d, rng));
                net.push(PositionalEncoding::new(d));
                for _ in 0..h.encoder_layers {
                    net.push(Residual::new(vec![
                        MultiHeadAttention::new(d, h.heads, rng)?.into(),
                        drop()?.into(),
                    ]));
                    net.push(LayerNorm::new(d));
                    net.push(Residual::new(vec![FeedForward::new(d, h.ff_inner, rng).into(), drop()?.into()]));
                    net.push(LayerNorm::new(d));
                }
                net.push(Dense::new(d, f, rng));
            }
        }
        Ok(net)
    }

    /// Trainable parameter count from the layer dimensions alone.
    pub fn closed_form_param_count(&self) -> usize {
        let h = self.hyper;
        let f = self.features;
        let dense = |i: usize, o: usize| i * o + o;
        let lstm = |i: usize, hid: usize| 4 * hid * (i + hid) + 4 * hid;
        let mha = |d: usize| 4 * dense(d, d);
        let norm = |d: usize| 2 * d;
        let conv = |i: usize, o: usize| CONV_KERNEL * i * o + o;
        match self.kind {
            ArchitectureKind::LstmAe => {
                lstm(f, h.lstm_hidden)
                    + norm(h.lstm_hidden)
                    + lstm(h.lstm_hidden, h.latent)
                    + lstm(h.latent, h.lstm_hidden)
                    + norm(h.lstm_hidden)
                    + dense(h.lstm_hidden, f)
            }
            ArchitectureKind::MhCLstmAe => {
                let c = h.conv_channels;
                conv(f, c)
                    + 2 * conv(c, c)
                    + norm(c)
                    + lstm(c, h.lstm_hidden)
                    + 2 * mha(h.lstm_hidden)
                    + dense(h.lstm_hidden, h.latent)
                    + dense(h.latent, h.lstm_hidden)
                    + lstm(h.lstm_hidden, c)
                    + 2 * conv(c, c)
                    + conv(c, f)
            }
            ArchitectureKind::TEe => {
                let d = h.d_model;
                let block = mha(d) + norm(d) + dense(d, h.ff_inner) + dense(h.ff_inner, d) + norm(d);
                dense(f, d) + h.encoder_layers * block + dense(d, f)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use preictal_nn::{Mode, Tensor};

    fn spec(kind: ArchitectureKind, steps: usize, features: usize) -> ArchitectureSpec {
        build(kind, Representation::Spectrogram, steps, features, Hyper::default()).unwrap()
    }

    #[test]
    fn output_shape_matches_input() {
        for kind in ArchitectureKind::ALL {
            let s = spec(kind, 5, 257);
            let mut rng = Rng::new(1);
            let mut net = s.instantiate(&mut rng).unwrap();
            let x = Tensor::filled(&[2, 5, 257], 0.3);
            let y = net.forward(&x, Mode::Infer, &mut rng).unwrap();
            assert_eq!(y.shape(), &[2, 5, 257], "{kind}");
        }
    }

    #[test]
    fn intermediate_lengths_keep_steps() {
        let s = spec(ArchitectureKind::MhCLstmAe, 9, 6);
        let mut rng = Rng::new(2);
        let mut net = s.instantiate(&mut rng).unwrap();
        let mut cur = Tensor::filled(&[1, 9, 6], 0.1);
        for layer in &mut net.layers {
            cur = layer.forward(&cur, Mode::Infer, &mut rng).unwrap();
            assert_eq!(cur.shape()[1], 9, "{}", layer.kind());
        }
    }

    #[test]
    fn parameter_counts_match_enumeration() {
        for kind in ArchitectureKind::ALL {
            for (steps, feats) in [(5, 257), (32, 16), (128, 128)] {
                let s = spec(kind, steps, feats);
                let net = s.instantiate(&mut Rng::new(0)).unwrap();
                assert_eq!(net.param_count(), s.closed_form_param_count(), "{kind} {feats}");
            }
        }
        // Transformer with two blocks on 257 features, written out by hand.
        let t = spec(ArchitectureKind::TEe, 5, 257);
        let block = 4 * (64 * 64 + 64) + 2 * 64 + (64 * 128 + 128) + (128 * 64 + 64) + 2 * 64;
        assert_eq!(t.closed_form_param_count(), 257 * 64 + 64 + 2 * block + 64 * 257 + 257);
    }

    #[test]
    fn invalid_hyperparameters() {
        let h = Hyper { heads: 3, ..Hyper::default() };
        assert!(build(ArchitectureKind::TEe, Representation::Dwt, 32, 16, h).is_err());
        let h = Hyper { dropout: 1.0, ..Hyper::default() };
        assert!(build(ArchitectureKind::LstmAe, Representation::Dwt, 32, 16, h).is_err());
        assert!(build(ArchitectureKind::LstmAe, Representation::Dwt, 0, 16, Hyper::default()).is_err());
        assert_eq!("MH-C-LSTM-AE".parse::<ArchitectureKind>().unwrap(), ArchitectureKind::MhCLstmAe);
    }
}
