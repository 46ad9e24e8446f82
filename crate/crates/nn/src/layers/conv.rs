use super::{accumulate_col_sums, add_bias, Mode, Param};
use crate::error::{NnError, Result};
use crate::linalg::{gemm, MatMut, MatRef};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Dilated 1-D convolution along the step axis with "same" zero padding.
///
/// Input `(batch, steps, in_channels)`; weight `(kernel, in, out)`. Tap `j` reads the
/// input at `t + (j - (kernel - 1) / 2) * dilation`, so the step count is preserved.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub weight: Param,
    pub bias: Param,
    pub dilation: usize,
    input: Option<Tensor>,
}

impl Conv1d {
    pub fn new(in_ch: usize, out_ch: usize, kernel: usize, dilation: usize, rng: &mut Rng) -> Result<Self> {
        if kernel % 2 == 0 || dilation == 0 {
            return Err(NnError::InvalidConfig(format!(
                "conv1d needs an odd kernel and dilation >= 1 (kernel {kernel}, dilation {dilation})"
            )));
        }
        Ok(Self {
            weight: Param::glorot(
                "weight",
                &[kernel, in_ch, out_ch],
                kernel * in_ch,
                kernel * out_ch,
                rng,
            ),
            bias: Param::zeros("bias", &[out_ch]),
            dilation,
            input: None,
        })
    }

    fn dims(&self) -> (usize, usize, usize) {
        (self.weight.shape[0], self.weight.shape[1], self.weight.shape[2])
    }

    /// Offset of tap `j` in steps.
    fn shift(&self, j: usize) -> isize {
        let (k, _, _) = self.dims();
        (j as isize - (k as isize - 1) / 2) * self.dilation as isize
    }

    /// Valid output range `[lo, hi)` of steps for which tap `j` reads inside the input.
    fn valid(&self, j: usize, steps: usize) -> (usize, usize) {
        let s = self.shift(j);
        let lo = (-s).max(0) as usize;
        let hi = (steps as isize - s).clamp(0, steps as isize) as usize;
        (lo.min(hi), hi)
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, _rng: &mut Rng) -> Result<Tensor> {
        let (k, ci, co) = self.dims();
        let (b, t, f) = x.dims3()?;
        if f != ci {
            return Err(crate::error::shape_err("conv1d", &[b, t, ci], x.shape()));
        }
        let mut out = vec![0.0; b * t * co];
        for j in 0..k {
            let (lo, hi) = self.valid(j, t);
            if hi <= lo {
                continue;
            }
            let s = self.shift(j);
            let w = MatRef::rm(&self.weight.value, ci, co).at(j * ci * co);
            for bi in 0..b {
                let src = ((bi * t) as isize + lo as isize + s) as usize * ci;
                gemm(
                    1.0,
                    MatRef::rm(x.data(), hi - lo, ci).at(src),
                    w,
                    1.0,
                    MatMut::rm(&mut out, co).at((bi * t + lo) * co),
                );
            }
        }
        add_bias(&mut out, &self.bias.value);
        self.input = (mode == Mode::Train).then(|| x.clone());
        Tensor::new(vec![b, t, co], out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let x = self.input.take().ok_or(NnError::BackwardBeforeForward("conv1d"))?;
        let (k, ci, co) = self.dims();
        let (b, t, _) = x.dims3()?;
        if grad.shape() != [b, t, co] {
            return Err(crate::error::shape_err("conv1d backward", &[b, t, co], grad.shape()));
        }
        let mut dx = vec![0.0; b * t * ci];
        for j in 0..k {
            let (lo, hi) = self.valid(j, t);
            if hi <= lo {
                continue;
            }
            let s = self.shift(j);
            for bi in 0..b {
                let src = ((bi * t) as isize + lo as isize + s) as usize * ci;
                let gy = MatRef::rm(grad.data(), hi - lo, co).at((bi * t + lo) * co);
                gemm(
                    1.0,
                    MatRef::rm(x.data(), hi - lo, ci).at(src).t(),
                    gy,
                    1.0,
                    MatMut::rm(&mut self.weight.grad, co).at(j * ci * co),
                );
                gemm(
                    1.0,
                    gy,
                    MatRef::rm(&self.weight.value, ci, co).at(j * ci * co).t(),
                    1.0,
                    MatMut::rm(&mut dx, ci).at(src),
                );
            }
        }
        accumulate_col_sums(&mut self.bias.grad, grad.data());
        Tensor::new(vec![b, t, ci], dx)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }
}
