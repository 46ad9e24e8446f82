use super::{accumulate_col_sums, Mode, Param};
use crate::error::{NnError, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Batch normalization over every position of the batch, per feature.
///
/// Running statistics follow `running = momentum * running + (1 - momentum) * batch`
/// and are only updated in training mode.
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
    cache: Option<NormCache>,
}

#[derive(Debug, Clone)]
struct NormCache {
    shape: Vec<usize>,
    xhat: Vec<f64>,
    /// Per-feature (batch norm) or per-row (layer norm) inverse standard deviation.
    inv_std: Vec<f64>,
}

impl BatchNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            gamma: Param::filled("gamma", &[dim], 1.0),
            beta: Param::zeros("beta", &[dim]),
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            momentum: 0.9,
            eps: 1e-5,
            cache: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.shape[0]
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, _rng: &mut Rng) -> Result<Tensor> {
        let d = self.dim();
        let rows = x.expect_last_dim("batchnorm", d)?;
        let (mean, var) = match mode {
            Mode::Train => {
                let mut mean = vec![0.0; d];
                accumulate_col_sums(&mut mean, x.data());
                mean.iter_mut().for_each(|m| *m /= rows as f64);
                let mut var = vec![0.0; d];
                for row in x.data().chunks_exact(d) {
                    for ((v, &xv), m) in var.iter_mut().zip(row).zip(&mean) {
                        *v += (xv - m) * (xv - m);
                    }
                }
                var.iter_mut().for_each(|v| *v /= rows as f64);
                for j in 0..d {
                    self.running_mean[j] = self.momentum * self.running_mean[j] + (1.0 - self.momentum) * mean[j];
                    self.running_var[j] = self.momentum * self.running_var[j] + (1.0 - self.momentum) * var[j];
                }
                (mean, var)
            }
            Mode::Infer => (self.running_mean.clone(), self.running_var.clone()),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let mut xhat = vec![0.0; x.len()];
        let mut out = vec![0.0; x.len()];
        for ((xr, hr), or) in x
            .data()
            .chunks_exact(d)
            .zip(xhat.chunks_exact_mut(d))
            .zip(out.chunks_exact_mut(d))
        {
            for j in 0..d {
                hr[j] = (xr[j] - mean[j]) * inv_std[j];
                or[j] = self.gamma.value[j] * hr[j] + self.beta.value[j];
            }
        }
        self.cache = (mode == Mode::Train).then(|| NormCache {
            shape: x.shape().to_vec(),
            xhat,
            inv_std,
        });
        Tensor::new(x.shape().to_vec(), out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let c = self.cache.take().ok_or(NnError::BackwardBeforeForward("batchnorm"))?;
        let d = self.dim();
        let rows = grad.expect_last_dim("batchnorm backward", d)?;
        let n = rows as f64;
        let mut sum_dy = vec![0.0; d];
        let mut sum_dy_xhat = vec![0.0; d];
        for (gr, hr) in grad.data().chunks_exact(d).zip(c.xhat.chunks_exact(d)) {
            for j in 0..d {
                sum_dy[j] += gr[j];
                sum_dy_xhat[j] += gr[j] * hr[j];
            }
        }
        for j in 0..d {
            self.gamma.grad[j] += sum_dy_xhat[j];
            self.beta.grad[j] += sum_dy[j];
        }
        let mut dx = vec![0.0; grad.len()];
        for ((dr, gr), hr) in dx
            .chunks_exact_mut(d)
            .zip(grad.data().chunks_exact(d))
            .zip(c.xhat.chunks_exact(d))
        {
            for j in 0..d {
                let g = self.gamma.value[j];
                dr[j] = g * c.inv_std[j] / n * (n * gr[j] - sum_dy[j] - hr[j] * sum_dy_xhat[j]);
            }
        }
        Tensor::new(c.shape, dx)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.gamma, &mut self.beta]
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.gamma, &self.beta]
    }
}

/// Per-position normalization over the feature axis.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gamma: Param,
    pub beta: Param,
    pub eps: f64,
    cache: Option<NormCache>,
}

impl LayerNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            gamma: Param::filled("gamma", &[dim], 1.0),
            beta: Param::zeros("beta", &[dim]),
            eps: 1e-5,
            cache: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.shape[0]
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, _rng: &mut Rng) -> Result<Tensor> {
        let d = self.dim();
        let rows = x.expect_last_dim("layernorm", d)?;
        let mut xhat = vec![0.0; x.len()];
        let mut out = vec![0.0; x.len()];
        let mut inv_std = vec![0.0; rows];
        for (r, ((xr, hr), or)) in x
            .data()
            .chunks_exact(d)
            .zip(xhat.chunks_exact_mut(d))
            .zip(out.chunks_exact_mut(d))
            .enumerate()
        {
            let mean = xr.iter().sum::<f64>() / d as f64;
            let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let is = 1.0 / (var + self.eps).sqrt();
            inv_std[r] = is;
            for j in 0..d {
                hr[j] = (xr[j] - mean) * is;
                or[j] = self.gamma.value[j] * hr[j] + self.beta.value[j];
            }
        }
        self.cache = (mode == Mode::Train).then(|| NormCache {
            shape: x.shape().to_vec(),
            xhat,
            inv_std,
        });
        Tensor::new(x.shape().to_vec(), out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let c = self.cache.take().ok_or(NnError::BackwardBeforeForward("layernorm"))?;
        let d = self.dim();
        grad.expect_last_dim("layernorm backward", d)?;
        let n = d as f64;
        let mut dx = vec![0.0; grad.len()];
        let mut dxhat = vec![0.0; d];
        for (r, ((dr, gr), hr)) in dx
            .chunks_exact_mut(d)
            .zip(grad.data().chunks_exact(d))
            .zip(c.xhat.chunks_exact(d))
            .enumerate()
        {
            for j in 0..d {
                self.gamma.grad[j] += gr[j] * hr[j];
                self.beta.grad[j] += gr[j];
                dxhat[j] = gr[j] * self.gamma.value[j];
            }
            let s1: f64 = dxhat.iter().sum();
            let s2: f64 = dxhat.iter().zip(hr).map(|(a, b)| a * b).sum();
            for j in 0..d {
                dr[j] = c.inv_std[r] / n * (n * dxhat[j] - s1 - hr[j] * s2);
            }
        }
        Tensor::new(c.shape, dx)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.gamma, &mut self.beta]
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.gamma, &self.beta]
    }
}
