use super::{Mode, Param};
use crate::error::{shape_err, NnError, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Inverted dropout: kept units are scaled by `1 / (1 - p)` at train time, so
/// inference is an exact pass-through.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub p: f64,
    mask: Option<Vec<f64>>,
}

impl Dropout {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(NnError::InvalidConfig(format!("dropout rate {p} outside [0, 1)")));
        }
        Ok(Self { p, mask: None })
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
        if mode == Mode::Infer {
            self.mask = None;
            return Ok(x.clone());
        }
        let keep = 1.0 - self.p;
        let mask: Vec<f64> = (0..x.len())
            .map(|_| if rng.uniform() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        let out = x.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        self.mask = Some(mask);
        Tensor::new(x.shape().to_vec(), out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let mask = self.mask.take().ok_or(NnError::BackwardBeforeForward("dropout"))?;
        if mask.len() != grad.len() {
            return Err(shape_err("dropout backward", &[mask.len()], grad.shape()));
        }
        let out = grad.data().iter().zip(&mask).map(|(g, m)| g * m).collect();
        Tensor::new(grad.shape().to_vec(), out)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }

    pub fn params(&self) -> Vec<&Param> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Relu {
    mask: Option<Vec<bool>>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, _rng: &mut Rng) -> Result<Tensor> {
        let out = x.data().iter().map(|&v| v.max(0.0)).collect();
        self.mask = (mode == Mode::Train).then(|| x.data().iter().map(|&v| v > 0.0).collect());
        Tensor::new(x.shape().to_vec(), out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let mask = self.mask.take().ok_or(NnError::BackwardBeforeForward("relu"))?;
        let out = grad
            .data()
            .iter()
            .zip(&mask)
            .map(|(&g, &k)| if k { g } else { 0.0 })
            .collect();
        Tensor::new(grad.shape().to_vec(), out)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }

    pub fn params(&self) -> Vec<&Param> {
        Vec::new()
    }
}

/// Adds fixed sinusoidal position codes to a `(batch, steps, dim)` input.
#[derive(Debug, Clone)]
pub struct PositionalEncoding {
    pub dim: usize,
    saved: bool,
}

impl PositionalEncoding {
    pub fn new(dim: usize) -> Self {
        Self { dim, saved: false }
    }

    pub fn code(step: usize, j: usize, dim: usize) -> f64 {
        let pair = (j / 2) as f64;
        let angle = step as f64 / 10000f64.powf(2.0 * pair / dim as f64);
        if j % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, _rng: &mut Rng) -> Result<Tensor> {
        let (b, t, d) = x.dims3()?;
        if d != self.dim {
            return Err(shape_err("positional encoding", &[b, t, self.dim], x.shape()));
        }
        let mut out = x.clone();
        for (r, row) in out.data_mut().chunks_exact_mut(d).enumerate() {
            let s = r % t;
            for (j, v) in row.iter_mut().enumerate() {
                *v += Self::code(s, j, d);
            }
        }
        self.saved = mode == Mode::Train;
        Ok(out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        if !std::mem::take(&mut self.saved) {
            return Err(NnError::BackwardBeforeForward("positional encoding"));
        }
        Ok(grad.clone())
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }

    pub fn params(&self) -> Vec<&Param> {
        Vec::new()
    }
}
