//! Central finite-difference checks of backward passes.
//!
//! The scalar probed is `L = sum(R * forward(x))` for a fixed random `R`, so the
//! analytic gradient is `backward(R)`. Errors are measured element-wise as
//! `|a - n| / max(|a|, |n|, 1e-3 * max|n|, 1e-5)`: relative for every entry that
//! carries signal. The floors cover gradients that are exactly zero analytically (the
//! attention key bias cancels inside the softmax), where only difference noise remains.

use crate::{Mode, Result, Rng, Sequential, Tensor};

pub const STEP: f64 = 1e-5;
const MASK_SEED: u64 = 99;

fn random_tensor(shape: &[usize], rng: &mut Rng) -> Result<Tensor> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.normal()).collect())
}

fn probe(net: &mut Sequential, x: &Tensor, r: &Tensor) -> Result<f64> {
    let mut rng = Rng::new(MASK_SEED);
    let y = net.forward(x, Mode::Train, &mut rng)?;
    Ok(y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum())
}

pub fn max_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-3 * scale).max(1e-5))
        .fold(0.0, f64::max)
}

/// Worst relative error of the input gradient and of each parameter, by name.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub input: f64,
    pub params: Vec<(String, f64)>,
}

impl GradCheck {
    pub fn worst(&self) -> f64 {
        self.params.iter().map(|p| p.1).fold(self.input, f64::max)
    }
}

/// Compares `net.backward` against central differences on a random input of
/// `input_shape`. Training mode, with the dropout mask held fixed across probes.
pub fn gradcheck(mut net: Sequential, input_shape: &[usize], seed: u64) -> Result<GradCheck> {
    let mut rng = Rng::new(seed);
    let x = random_tensor(input_shape, &mut rng)?;
    let mut mask_rng = Rng::new(MASK_SEED);
    let y = net.forward(&x, Mode::Train, &mut mask_rng)?;
    let r = random_tensor(y.shape(), &mut rng)?;
    net.zero_grad();
    let dx = net.backward(&r)?;

    let mut numeric = vec![0.0; x.len()];
    for (i, slot) in numeric.iter_mut().enumerate() {
        let mut xp = x.clone();
        xp.data_mut()[i] += STEP;
        let mut xm = x.clone();
        xm.data_mut()[i] -= STEP;
        *slot = (probe(&mut net, &xp, &r)? - probe(&mut net, &xm, &r)?) / (2.0 * STEP);
    }
    let input = max_rel_error(dx.data(), &numeric);

    let analytic: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.clone()).collect();
    let mut params = Vec::new();
    for (pi, a) in analytic.iter().enumerate() {
        let mut numeric = vec![0.0; a.len()];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let orig = net.params()[pi].value[i];
            net.params_mut()[pi].value[i] = orig + STEP;
            let lp = probe(&mut net, &x, &r)?;
            net.params_mut()[pi].value[i] = orig - STEP;
            let lm = probe(&mut net, &x, &r)?;
            net.params_mut()[pi].value[i] = orig;
            *slot = (lp - lm) / (2.0 * STEP);
        }
        params.push((net.params()[pi].name.to_string(), max_rel_error(a, &numeric)));
    }
    Ok(GradCheck { input, params })
}
