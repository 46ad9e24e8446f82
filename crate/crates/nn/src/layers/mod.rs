//! Layer set for the reconstruction models.
//!
//! All sequence layers consume and produce `(batch, steps, features)` tensors; the
//! position-wise layers (`Dense`, `LayerNorm`, `BatchNorm`, `FeedForward`, ...) act on
//! the last axis and accept any rank >= 2.

mod attention;
mod conv;
mod dense;
mod lstm;
mod misc;
mod norm;

pub use attention::MultiHeadAttention;
pub use conv::Conv1d;
pub use dense::{Dense, FeedForward};
pub use lstm::Lstm;
pub use misc::{Dropout, PositionalEncoding, Relu};
pub use norm::{BatchNorm, LayerNorm};

use crate::error::Result;
use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active, batch statistics, activations saved for backward.
    Train,
    /// Deterministic pass-through; nothing is saved.
    Infer,
}

/// Trainable tensor plus its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Param {
    pub fn zeros(name: &'static str, shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            name,
            shape: shape.to_vec(),
            value: vec![0.0; n],
            grad: vec![0.0; n],
        }
    }

    pub fn filled(name: &'static str, shape: &[usize], v: f64) -> Self {
        let mut p = Self::zeros(name, shape);
        p.value.fill(v);
        p
    }

    /// Glorot/Xavier uniform initialization.
    pub fn glorot(name: &'static str, shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(name, shape);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for v in &mut p.value {
            *v = rng.uniform_range(-limit, limit);
        }
        p
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Named view of one persistent tensor (parameter or running buffer).
pub struct StateRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: &'a [f64],
}

pub struct StateMut<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: &'a mut Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum Layer {
    Dense(Dense),
    Conv1d(Conv1d),
    Lstm(Lstm),
    MultiHeadAttention(MultiHeadAttention),
    BatchNorm(BatchNorm),
    LayerNorm(LayerNorm),
    Dropout(Dropout),
    FeedForward(FeedForward),
    Relu(Relu),
    PositionalEncoding(PositionalEncoding),
    Residual(Residual),
}

macro_rules! dispatch {
    ($self:ident, $l:ident => $e:expr) => {
        match $self {
            Layer::Dense($l) => $e,
            Layer::Conv1d($l) => $e,
            Layer::Lstm($l) => $e,
            Layer::MultiHeadAttention($l) => $e,
            Layer::BatchNorm($l) => $e,
            Layer::LayerNorm($l) => $e,
            Layer::Dropout($l) => $e,
            Layer::FeedForward($l) => $e,
            Layer::Relu($l) => $e,
            Layer::PositionalEncoding($l) => $e,
            Layer::Residual($l) => $e,
        }
    };
}

impl Layer {
    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
        dispatch!(self, l => l.forward(x, mode, rng))
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        dispatch!(self, l => l.backward(grad))
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        dispatch!(self, l => l.params_mut())
    }

    pub fn params(&self) -> Vec<&Param> {
        dispatch!(self, l => l.params())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv1d(_) => "conv1d",
            Layer::Lstm(_) => "lstm",
            Layer::MultiHeadAttention(_) => "mha",
            Layer::BatchNorm(_) => "batchnorm",
            Layer::LayerNorm(_) => "layernorm",
            Layer::Dropout(_) => "dropout",
            Layer::FeedForward(_) => "ff",
            Layer::Relu(_) => "relu",
            Layer::PositionalEncoding(_) => "posenc",
            Layer::Residual(_) => "residual",
        }
    }

    fn state<'a>(&'a self, prefix: &str, out: &mut Vec<StateRef<'a>>) {
        let prefix = format!("{prefix}{}.", self.kind());
        match self {
            Layer::Residual(r) => r.inner.state_into(&prefix, out),
            Layer::BatchNorm(bn) => {
                for p in bn.params() {
                    out.push(StateRef {
                        name: format!("{prefix}{}", p.name),
                        shape: p.shape.clone(),
                        value: &p.value,
                    });
                }
                out.push(StateRef {
                    name: format!("{prefix}running_mean"),
                    shape: vec![bn.dim()],
                    value: &bn.running_mean,
                });
                out.push(StateRef {
                    name: format!("{prefix}running_var"),
                    shape: vec![bn.dim()],
                    value: &bn.running_var,
                });
            }
            other => {
                for p in other.params() {
                    out.push(StateRef {
                        name: format!("{prefix}{}", p.name),
                        shape: p.shape.clone(),
                        value: &p.value,
                    });
                }
            }
        }
    }

    fn state_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<StateMut<'a>>) {
        let prefix = format!("{prefix}{}.", self.kind());
        match self {
            Layer::Residual(r) => r.inner.state_mut_into(&prefix, out),
            Layer::BatchNorm(bn) => {
                let dim = bn.dim();
                let BatchNorm {
                    gamma,
                    beta,
                    running_mean,
                    running_var,
                    ..
                } = bn;
                for p in [gamma, beta] {
                    out.push(StateMut {
                        name: format!("{prefix}{}", p.name),
                        shape: p.shape.clone(),
                        value: &mut p.value,
                    });
                }
                out.push(StateMut {
                    name: format!("{prefix}running_mean"),
                    shape: vec![dim],
                    value: running_mean,
                });
                out.push(StateMut {
                    name: format!("{prefix}running_var"),
                    shape: vec![dim],
                    value: running_var,
                });
            }
            other => {
                for p in other.params_mut() {
                    out.push(StateMut {
                        name: format!("{prefix}{}", p.name),
                        shape: p.shape.clone(),
                        value: &mut p.value,
                    });
                }
            }
        }
    }
}

macro_rules! impl_from_layer {
    ($($t:ident),*) => {
        $(impl From<$t> for Layer {
            fn from(l: $t) -> Self {
                Layer::$t(l)
            }
        })*
    };
}

impl_from_layer!(
    Dense,
    Conv1d,
    Lstm,
    MultiHeadAttention,
    BatchNorm,
    LayerNorm,
    Dropout,
    FeedForward,
    Relu,
    PositionalEncoding,
    Residual
);

/// Ordered stack of layers, differentiated in reverse order.
#[derive(Debug, Clone, Default)]
pub struct Sequential {
    pub layers: Vec<Layer>,
}

impl Sequential {
    pub fn new(layers: Vec<Layer>) -> Self {
        Self { layers }
    }

    pub fn push(&mut self, layer: impl Into<Layer>) {
        self.layers.push(layer.into());
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
        let mut cur = x.clone();
        for layer in &mut self.layers {
            cur = layer.forward(&cur, mode, rng)?;
        }
        Ok(cur)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let mut g = grad.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Every persistent tensor (parameters and running buffers) in a stable order.
    pub fn state(&self) -> Vec<StateRef<'_>> {
        let mut out = Vec::new();
        self.state_into("", &mut out);
        out
    }

    pub fn state_mut(&mut self) -> Vec<StateMut<'_>> {
        let mut out = Vec::new();
        self.state_mut_into("", &mut out);
        out
    }

    fn state_into<'a>(&'a self, prefix: &str, out: &mut Vec<StateRef<'a>>) {
        for (i, l) in self.layers.iter().enumerate() {
            l.state(&format!("{prefix}{i}."), out);
        }
    }

    fn state_mut_into<'a>(&'a mut self, prefix: &str, out: &mut Vec<StateMut<'a>>) {
        for (i, l) in self.layers.iter_mut().enumerate() {
            l.state_mut(&format!("{prefix}{i}."), out);
        }
    }
}

/// `y = x + inner(x)`.
#[derive(Debug, Clone)]
pub struct Residual {
    pub inner: Sequential,
}

impl Residual {
    pub fn new(layers: Vec<Layer>) -> Self {
        Self {
            inner: Sequential::new(layers),
        }
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
        let mut y = self.inner.forward(x, mode, rng)?;
        if y.shape() != x.shape() {
            return Err(crate::error::shape_err("residual", x.shape(), y.shape()));
        }
        for (o, i) in y.data_mut().iter_mut().zip(x.data()) {
            *o += i;
        }
        Ok(y)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let mut g = self.inner.backward(grad)?;
        for (o, i) in g.data_mut().iter_mut().zip(grad.data()) {
            *o += i;
        }
        Ok(g)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.inner.params_mut()
    }

    pub fn params(&self) -> Vec<&Param> {
        self.inner.params()
    }
}

/// Adds `row` (length `bias.len()`) to every row of `out`.
pub(crate) fn add_bias(out: &mut [f64], bias: &[f64]) {
    for row in out.chunks_exact_mut(bias.len()) {
        for (o, b) in row.iter_mut().zip(bias) {
            *o += b;
        }
    }
}

/// Column sums of a row-major `(rows, cols)` buffer, accumulated into `acc`.
pub(crate) fn accumulate_col_sums(acc: &mut [f64], m: &[f64]) {
    for row in m.chunks_exact(acc.len()) {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
}
