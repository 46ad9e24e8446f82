use super::{accumulate_col_sums, add_bias, Mode, Param};
use crate::error::{shape_err, NnError, Result};
use crate::linalg::{gemm, MatMut, MatRef};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Bidirectional (unmasked) multi-head scaled dot-product self-attention.
#[derive(Debug, Clone)]
pub struct MultiHeadAttention {
    pub heads: usize,
    pub w_query: Param,
    pub b_query: Param,
    pub w_key: Param,
    pub b_key: Param,
    pub w_value: Param,
    pub b_value: Param,
    pub w_out: Param,
    pub b_out: Param,
    cache: Option<AttnCache>,
    last_probs: Vec<f64>,
}

#[derive(Debug, Clone)]
struct AttnCache {
    input: Tensor,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    probs: Vec<f64>,
    ctx: Vec<f64>,
}

impl MultiHeadAttention {
    pub fn new(dim: usize, heads: usize, rng: &mut Rng) -> Result<Self> {
        if heads == 0 || dim % heads != 0 {
            return Err(NnError::InvalidConfig(format!(
                "attention dim {dim} is not divisible by {heads} heads"
            )));
        }
        let mut w = |name| Param::glorot(name, &[dim, dim], dim, dim, rng);
        let (wq, wk, wv, wo) = (w("w_query"), w("w_key"), w("w_value"), w("w_out"));
        Ok(Self {
            heads,
            w_query: wq,
            b_query: Param::zeros("b_query", &[dim]),
            w_key: wk,
            b_key: Param::zeros("b_key", &[dim]),
            w_value: wv,
            b_value: Param::zeros("b_value", &[dim]),
            w_out: wo,
            b_out: Param::zeros("b_out", &[dim]),
            cache: None,
            last_probs: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.w_query.shape[0]
    }

    /// Softmax weights of the most recent forward pass, `(batch, heads, steps, steps)`.
    pub fn last_attention(&self) -> &[f64] {
        &self.last_probs
    }

    fn project(x: &[f64], rows: usize, dim: usize, w: &Param, b: &Param) -> Vec<f64> {
        let mut out = vec![0.0; rows * dim];
        gemm(
            1.0,
            MatRef::rm(x, rows, dim),
            MatRef::rm(&w.value, dim, dim),
            0.0,
            MatMut::rm(&mut out, dim),
        );
        add_bias(&mut out, &b.value);
        out
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, _rng: &mut Rng) -> Result<Tensor> {
        let d = self.dim();
        let (b, t, f) = x.dims3()?;
        if f != d {
            return Err(shape_err("attention", &[b, t, d], x.shape()));
        }
        let nh = self.heads;
        let dh = d / nh;
        let scale = 1.0 / (dh as f64).sqrt();
        let rows = b * t;
        let q = Self::project(x.data(), rows, d, &self.w_query, &self.b_query);
        let k = Self::project(x.data(), rows, d, &self.w_key, &self.b_key);
        let v = Self::project(x.data(), rows, d, &self.w_value, &self.b_value);
        let mut probs = vec![0.0; b * nh * t * t];
        let mut ctx = vec![0.0; rows * d];
        for bi in 0..b {
            for hi in 0..nh {
                let off = bi * t * d + hi * dh;
                let p_off = (bi * nh + hi) * t * t;
                let head = MatRef::rm(&q, t, dh).with_strides(d, 1).at(off);
                gemm(
                    scale,
                    head,
                    MatRef::rm(&k, t, dh).with_strides(d, 1).at(off).t(),
                    0.0,
                    MatMut::rm(&mut probs, t).at(p_off),
                );
                for row in probs[p_off..p_off + t * t].chunks_exact_mut(t) {
                    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let mut sum = 0.0;
                    for p in row.iter_mut() {
                        *p = (*p - m).exp();
                        sum += *p;
                    }
                    for p in row.iter_mut() {
                        *p /= sum;
                    }
                }
                gemm(
                    1.0,
                    MatRef::rm(&probs, t, t).at(p_off),
                    MatRef::rm(&v, t, dh).with_strides(d, 1).at(off),
                    0.0,
                    MatMut::rm(&mut ctx, d).at(off),
                );
            }
        }
        let out = Self::project(&ctx, rows, d, &self.w_out, &self.b_out);
        self.last_probs = probs.clone();
        self.cache = (mode == Mode::Train).then(|| AttnCache {
            input: x.clone(),
            q,
            k,
            v,
            probs,
            ctx,
        });
        Tensor::new(vec![b, t, d], out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let c = self.cache.take().ok_or(NnError::BackwardBeforeForward("attention"))?;
        let d = self.dim();
        let (b, t, _) = c.input.dims3()?;
        if grad.shape() != [b, t, d] {
            return Err(shape_err("attention backward", &[b, t, d], grad.shape()));
        }
        let nh = self.heads;
        let dh = d / nh;
        let scale = 1.0 / (dh as f64).sqrt();
        let rows = b * t;
        let g = grad.data();

        // Output projection.
        gemm(
            1.0,
            MatRef::rm(&c.ctx, rows, d).t(),
            MatRef::rm(g, rows, d),
            1.0,
            MatMut::rm(&mut self.w_out.grad, d),
        );
        accumulate_col_sums(&mut self.b_out.grad, g);
        let mut dctx = vec![0.0; rows * d];
        gemm(
            1.0,
            MatRef::rm(g, rows, d),
            MatRef::rm(&self.w_out.value, d, d).t(),
            0.0,
            MatMut::rm(&mut dctx, d),
        );

        let mut dq = vec![0.0; rows * d];
        let mut dk = vec![0.0; rows * d];
        let mut dv = vec![0.0; rows * d];
        let mut dp = vec![0.0; t * t];
        for bi in 0..b {
            for hi in 0..nh {
                let off = bi * t * d + hi * dh;
                let p_off = (bi * nh + hi) * t * t;
                let probs = MatRef::rm(&c.probs, t, t).at(p_off);
                let dctx_h = MatRef::rm(&dctx, t, dh).with_strides(d, 1).at(off);
                gemm(
                    1.0,
                    dctx_h,
                    MatRef::rm(&c.v, t, dh).with_strides(d, 1).at(off).t(),
                    0.0,
                    MatMut::rm(&mut dp, t),
                );
                gemm(1.0, probs.t(), dctx_h, 0.0, MatMut::rm(&mut dv, d).at(off));
                // Softmax backward, folded with the score scale.
                let pr = &c.probs[p_off..p_off + t * t];
                for (drow, prow) in dp.chunks_exact_mut(t).zip(pr.chunks_exact(t)) {
                    let dot: f64 = drow.iter().zip(prow).map(|(a, p)| a * p).sum();
                    for (dv_, &p) in drow.iter_mut().zip(prow) {
                        *dv_ = p * (*dv_ - dot) * scale;
                    }
                }
                gemm(
                    1.0,
                    MatRef::rm(&dp, t, t),
                    MatRef::rm(&c.k, t, dh).with_strides(d, 1).at(off),
                    0.0,
                    MatMut::rm(&mut dq, d).at(off),
                );
                gemm(
                    1.0,
                    MatRef::rm(&dp, t, t).t(),
                    MatRef::rm(&c.q, t, dh).with_strides(d, 1).at(off),
                    0.0,
                    MatMut::rm(&mut dk, d).at(off),
                );
            }
        }

        let x = c.input.data();
        let mut dx = vec![0.0; rows * d];
        for (dproj, w, bias) in [
            (&dq, &mut self.w_query, &mut self.b_query),
            (&dk, &mut self.w_key, &mut self.b_key),
            (&dv, &mut self.w_value, &mut self.b_value),
        ] {
            gemm(
                1.0,
                MatRef::rm(x, rows, d).t(),
                MatRef::rm(dproj, rows, d),
                1.0,
                MatMut::rm(&mut w.grad, d),
            );
            accumulate_col_sums(&mut bias.grad, dproj);
            gemm(
                1.0,
                MatRef::rm(dproj, rows, d),
                MatRef::rm(&w.value, d, d).t(),
                1.0,
                MatMut::rm(&mut dx, d),
            );
        }
        Tensor::new(vec![b, t, d], dx)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![
            &mut self.w_query,
            &mut self.b_query,
            &mut self.w_key,
            &mut self.b_key,
            &mut self.w_value,
            &mut self.b_value,
            &mut self.w_out,
            &mut self.b_out,
        ]
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![
            &self.w_query,
            &self.b_query,
            &self.w_key,
            &self.b_key,
            &self.w_value,
            &self.b_value,
            &self.w_out,
            &self.b_out,
        ]
    }
}
