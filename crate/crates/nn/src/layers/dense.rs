use super::{accumulate_col_sums, add_bias, Mode, Param};
use crate::error::{NnError, Result};
use crate::linalg::{gemm, MatMut, MatRef};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Position-wise affine map over the last axis: `y = x W + b`, `W` is `(in, out)`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Param,
    pub bias: Param,
    input: Option<Tensor>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        Self {
            weight: Param::glorot("weight", &[inputs, outputs], inputs, outputs, rng),
            bias: Param::zeros("bias", &[outputs]),
            input: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, _rng: &mut Rng) -> Result<Tensor> {
        let (i, o) = (self.inputs(), self.outputs());
        let rows = x.expect_last_dim("dense", i)?;
        let mut out = vec![0.0; rows * o];
        gemm(
            1.0,
            MatRef::rm(x.data(), rows, i),
            MatRef::rm(&self.weight.value, i, o),
            0.0,
            MatMut::rm(&mut out, o),
        );
        add_bias(&mut out, &self.bias.value);
        let mut shape = x.shape().to_vec();
        *shape.last_mut().unwrap() = o;
        self.input = (mode == Mode::Train).then(|| x.clone());
        Tensor::new(shape, out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let x = self.input.take().ok_or(NnError::BackwardBeforeForward("dense"))?;
        let (i, o) = (self.inputs(), self.outputs());
        let rows = grad.expect_last_dim("dense backward", o)?;
        gemm(
            1.0,
            MatRef::rm(x.data(), rows, i).t(),
            MatRef::rm(grad.data(), rows, o),
            1.0,
            MatMut::rm(&mut self.weight.grad, o),
        );
        accumulate_col_sums(&mut self.bias.grad, grad.data());
        let mut dx = vec![0.0; rows * i];
        gemm(
            1.0,
            MatRef::rm(grad.data(), rows, o),
            MatRef::rm(&self.weight.value, i, o).t(),
            0.0,
            MatMut::rm(&mut dx, i),
        );
        Tensor::new(x.shape().to_vec(), dx)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }
}

/// Two-layer position-wise network with a rectifier: `relu(x W1 + b1) W2 + b2`.
#[derive(Debug, Clone)]
pub struct FeedForward {
    pub inner: Dense,
    pub outer: Dense,
    mask: Option<Vec<bool>>,
}

impl FeedForward {
    pub fn new(dim: usize, inner: usize, rng: &mut Rng) -> Self {
        Self {
            inner: Dense::new(dim, inner, rng),
            outer: Dense::new(inner, dim, rng),
            mask: None,
        }
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
        let mut h = self.inner.forward(x, mode, rng)?;
        let mask: Vec<bool> = h.data().iter().map(|&v| v > 0.0).collect();
        for (v, &keep) in h.data_mut().iter_mut().zip(&mask) {
            if !keep {
                *v = 0.0;
            }
        }
        self.mask = (mode == Mode::Train).then_some(mask);
        self.outer.forward(&h, mode, rng)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let mask = self.mask.take().ok_or(NnError::BackwardBeforeForward("feedforward"))?;
        let mut g = self.outer.backward(grad)?;
        for (v, keep) in g.data_mut().iter_mut().zip(mask) {
            if !keep {
                *v = 0.0;
            }
        }
        self.inner.backward(&g)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.inner.params_mut();
        p.extend(self.outer.params_mut());
        p
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut p = self.inner.params();
        p.extend(self.outer.params());
        p
    }
}
