use super::{Mode, Param};
use crate::error::{shape_err, NnError, Result};
use crate::linalg::{gemm, MatMut, MatRef};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Single-layer LSTM returning the full hidden sequence.
///
/// Gate pre-activations are laid out `[i | f | g | o]`, each `hidden` wide:
/// `c_t = f * c_{t-1} + i * g`, `h_t = o * tanh(c_t)`, zero initial state.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub w_input: Param,
    pub w_hidden: Param,
    pub bias: Param,
    cache: Option<LstmCache>,
}

#[derive(Debug, Clone)]
struct LstmCache {
    input: Tensor,
    /// Post-activation gates, `(steps, batch, 4 * hidden)`.
    gates: Vec<f64>,
    /// Cell states, `(steps, batch, hidden)`.
    cells: Vec<f64>,
    /// Hidden states, `(steps, batch, hidden)`.
    hiddens: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Lstm {
    pub fn new(inputs: usize, hidden: usize, rng: &mut Rng) -> Self {
        let mut bias = Param::zeros("bias", &[4 * hidden]);
        // Forget-gate bias of one keeps early gradients flowing through the cell.
        bias.value[hidden..2 * hidden].fill(1.0);
        Self {
            w_input: Param::glorot("w_input", &[inputs, 4 * hidden], inputs, 4 * hidden, rng),
            w_hidden: Param::glorot("w_hidden", &[hidden, 4 * hidden], hidden, 4 * hidden, rng),
            bias,
            cache: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.w_input.shape[0]
    }

    pub fn hidden(&self) -> usize {
        self.w_hidden.shape[0]
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode, _rng: &mut Rng) -> Result<Tensor> {
        let (b, t, f) = x.dims3()?;
        let (i_dim, h) = (self.inputs(), self.hidden());
        if f != i_dim {
            return Err(shape_err("lstm", &[b, t, i_dim], x.shape()));
        }
        let g4 = 4 * h;
        // Input projection for every (batch, step) row at once: rows are b * t + s.
        let mut xw = vec![0.0; b * t * g4];
        gemm(
            1.0,
            MatRef::rm(x.data(), b * t, i_dim),
            MatRef::rm(&self.w_input.value, i_dim, g4),
            0.0,
            MatMut::rm(&mut xw, g4),
        );
        let mut gates = vec![0.0; t * b * g4];
        let mut cells = vec![0.0; t * b * h];
        let mut hiddens = vec![0.0; t * b * h];
        let mut z = vec![0.0; b * g4];
        for s in 0..t {
            for bi in 0..b {
                let src = &xw[(bi * t + s) * g4..(bi * t + s + 1) * g4];
                let dst = &mut z[bi * g4..(bi + 1) * g4];
                for ((d, &v), &bb) in dst.iter_mut().zip(src).zip(&self.bias.value) {
                    *d = v + bb;
                }
            }
            if s > 0 {
                gemm(
                    1.0,
                    MatRef::rm(&hiddens, b, h).at((s - 1) * b * h),
                    MatRef::rm(&self.w_hidden.value, h, g4),
                    1.0,
                    MatMut::rm(&mut z, g4),
                );
            }
            for bi in 0..b {
                let zr = &z[bi * g4..(bi + 1) * g4];
                let base = (s * b + bi) * h;
                for k in 0..h {
                    let ig = sigmoid(zr[k]);
                    let fg = sigmoid(zr[h + k]);
                    let gg = zr[2 * h + k].tanh();
                    let og = sigmoid(zr[3 * h + k]);
                    let c_prev = if s > 0 { cells[base - b * h + k] } else { 0.0 };
                    let c = fg * c_prev + ig * gg;
                    cells[base + k] = c;
                    hiddens[base + k] = og * c.tanh();
                    let gb = (s * b + bi) * g4;
                    gates[gb + k] = ig;
                    gates[gb + h + k] = fg;
                    gates[gb + 2 * h + k] = gg;
                    gates[gb + 3 * h + k] = og;
                }
            }
        }
        let mut out = vec![0.0; b * t * h];
        for s in 0..t {
            for bi in 0..b {
                out[(bi * t + s) * h..(bi * t + s + 1) * h]
                    .copy_from_slice(&hiddens[(s * b + bi) * h..(s * b + bi + 1) * h]);
            }
        }
        self.cache = (mode == Mode::Train).then(|| LstmCache {
            input: x.clone(),
            gates,
            cells,
            hiddens,
        });
        Tensor::new(vec![b, t, h], out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let cache = self.cache.take().ok_or(NnError::BackwardBeforeForward("lstm"))?;
        let (b, t, i_dim) = cache.input.dims3()?;
        let h = self.hidden();
        let g4 = 4 * h;
        if grad.shape() != [b, t, h] {
            return Err(shape_err("lstm backward", &[b, t, h], grad.shape()));
        }
        // Pre-activation gradients for every (batch, step) row, laid out like `xw`.
        let mut dz_all = vec![0.0; b * t * g4];
        let mut dh_next = vec![0.0; b * h];
        let mut dc_next = vec![0.0; b * h];
        let mut dz = vec![0.0; b * g4];
        for s in (0..t).rev() {
            for bi in 0..b {
                let base = (s * b + bi) * h;
                let gb = (s * b + bi) * g4;
                for k in 0..h {
                    let ig = cache.gates[gb + k];
                    let fg = cache.gates[gb + h + k];
                    let gg = cache.gates[gb + 2 * h + k];
                    let og = cache.gates[gb + 3 * h + k];
                    let c = cache.cells[base + k];
                    let c_prev = if s > 0 { cache.cells[base - b * h + k] } else { 0.0 };
                    let tc = c.tanh();
                    let dh = grad.data()[(bi * t + s) * h + k] + dh_next[bi * h + k];
                    let dc = dh * og * (1.0 - tc * tc) + dc_next[bi * h + k];
                    let zr = &mut dz[bi * g4..(bi + 1) * g4];
                    zr[k] = dc * gg * ig * (1.0 - ig);
                    zr[h + k] = dc * c_prev * fg * (1.0 - fg);
                    zr[2 * h + k] = dc * ig * (1.0 - gg * gg);
                    zr[3 * h + k] = dh * tc * og * (1.0 - og);
                    dc_next[bi * h + k] = dc * fg;
                }
                dz_all[(bi * t + s) * g4..(bi * t + s + 1) * g4]
                    .copy_from_slice(&dz[bi * g4..(bi + 1) * g4]);
            }
            if s > 0 {
                gemm(
                    1.0,
                    MatRef::rm(&cache.hiddens, b, h).at((s - 1) * b * h).t(),
                    MatRef::rm(&dz, b, g4),
                    1.0,
                    MatMut::rm(&mut self.w_hidden.grad, g4),
                );
            }
            gemm(
                1.0,
                MatRef::rm(&dz, b, g4),
                MatRef::rm(&self.w_hidden.value, h, g4).t(),
                0.0,
                MatMut::rm(&mut dh_next, h),
            );
        }
        gemm(
            1.0,
            MatRef::rm(cache.input.data(), b * t, i_dim).t(),
            MatRef::rm(&dz_all, b * t, g4),
            1.0,
            MatMut::rm(&mut self.w_input.grad, g4),
        );
        super::accumulate_col_sums(&mut self.bias.grad, &dz_all);
        let mut dx = vec![0.0; b * t * i_dim];
        gemm(
            1.0,
            MatRef::rm(&dz_all, b * t, g4),
            MatRef::rm(&self.w_input.value, i_dim, g4).t(),
            0.0,
            MatMut::rm(&mut dx, i_dim),
        );
        Tensor::new(vec![b, t, i_dim], dx)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w_input, &mut self.w_hidden, &mut self.bias]
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w_input, &self.w_hidden, &self.bias]
    }
}
