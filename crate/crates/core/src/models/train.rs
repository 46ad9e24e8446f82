use preictal_nn::{mse_loss, Adam, AdamConfig, Mode, Rng, Sequential, Tensor};
use rayon::prelude::*;

use super::ArchitectureSpec;
use crate::error::{Error, Result};
use crate::features::{apply_normalization, fit_normalization, FeatureSet, NormalizationStats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainPlan {
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs without an improvement of at least `min_delta` before stopping.
    pub patience: usize,
    pub min_delta: f64,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainPlan {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            patience: 5,
            min_delta: 1e-5,
            lr: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub spec: ArchitectureSpec,
    pub net: Sequential,
    pub stats: NormalizationStats,
    /// Mean training-mode loss of each epoch that ran.
    pub epoch_losses: Vec<f64>,
    /// Inference-mode MSE over the training set before the first update.
    pub initial_loss: f64,
    /// Inference-mode MSE over the training set with the kept checkpoint.
    pub final_loss: f64,
    /// Zero-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub plan: TrainPlan,
}

impl TrainedModel {
    /// Best-so-far loss after each epoch; nonincreasing by construction.
    pub fn best_history(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.epoch_losses
            .iter()
            .map(|&l| {
                best = best.min(l);
                best
            })
            .collect()
    }
}

fn batch_tensor(rows: &[&[f64]], steps: usize, features: usize) -> Result<Tensor> {
    let mut data = Vec::with_capacity(rows.len() * steps * features);
    for r in rows {
        data.extend_from_slice(r);
    }
    Ok(Tensor::new(vec![rows.len(), steps, features], data)?)
}

/// Per-sample inference MSE. Each sample runs alone on its own copy of the network,
/// so the result does not depend on how the work is split.
pub fn reconstruction_errors(net: &Sequential, spec: &ArchitectureSpec, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
    inputs
        .par_iter()
        .map_init(
            || (net.clone(), Rng::new(0)),
            |(net, rng), x| {
                let t = batch_tensor(&[x.as_slice()], spec.steps, spec.features)?;
                let y = net.forward(&t, Mode::Infer, rng)?;
                Ok(mse_loss(&y, &t)?.0)
            },
        )
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Fits normalization statistics on `train` and trains a fresh network on the
/// normalized segments. Weight init, shuffling and dropout use separate streams
/// forked from `plan.seed`.
pub fn train(spec: &ArchitectureSpec, train: &[&[f64]], plan: &TrainPlan) -> Result<TrainedModel> {
    if train.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    if plan.epochs == 0 || plan.batch_size == 0 {
        return Err(Error::Config("epochs and batch_size must be positive".into()));
    }
    let dims = spec.steps * spec.features;
    if let Some(bad) = train.iter().find(|x| x.len() != dims) {
        return Err(Error::Data(format!(
            "training feature has {} values, architecture expects {} x {}",
            bad.len(),
            spec.steps,
            spec.features
        )));
    }
    let stats = fit_normalization(train)?;
    let data: Vec<Vec<f64>> = train
        .iter()
        .map(|x| apply_normalization(x, &stats))
        .collect::<Result<_>>()?;

    let mut root = Rng::new(plan.seed);
    let mut init_rng = root.fork();
    let mut shuffle_rng = root.fork();
    let mut dropout_rng = root.fork();
    let mut net = spec.instantiate(&mut init_rng)?;
    let mut adam = Adam::new(AdamConfig {
        lr: plan.lr,
        ..AdamConfig::default()
    });

    let initial_loss = mean(&reconstruction_errors(&net, spec, &data)?);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::new();
    let mut best = (f64::INFINITY, 0usize, net.clone());
    let mut stale = 0;
    for epoch in 0..plan.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut total = 0.0;
        for chunk in order.chunks(plan.batch_size) {
            let rows: Vec<&[f64]> = chunk.iter().map(|&i| data[i].as_slice()).collect();
            let x = batch_tensor(&rows, spec.steps, spec.features)?;
            net.zero_grad();
            let y = net.forward(&x, Mode::Train, &mut dropout_rng)?;
            let (loss, grad) = mse_loss(&y, &x)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            net.backward(&grad)?;
            adam.step(&mut net.params_mut())?;
            total += loss * chunk.len() as f64;
        }
        let epoch_loss = total / data.len() as f64;
        epoch_losses.push(epoch_loss);
        if epoch_loss < best.0 - plan.min_delta {
            best = (epoch_loss, epoch, net.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= plan.patience {
                break;
            }
        }
    }
    let (_, best_epoch, net) = best;
    let final_loss = mean(&reconstruction_errors(&net, spec, &data)?);
    if !final_loss.is_finite() {
        return Err(Error::Divergence {
            epoch: epoch_losses.len().saturating_sub(1),
        });
    }
    Ok(TrainedModel {
        spec: *spec,
        net,
        stats,
        epoch_losses,
        initial_loss,
        final_loss,
        best_epoch,
        plan: *plan,
    })
}

/// Reconstruction error of each raw (unnormalized) feature under the model's stored statistics.
pub fn score_raw(model: &TrainedModel, features: &[&[f64]]) -> Result<Vec<f64>> {
    let data: Vec<Vec<f64>> = features
        .iter()
        .map(|x| apply_normalization(x, &model.stats))
        .collect::<Result<_>>()?;
    reconstruction_errors(&model.net, &model.spec, &data)
}

/// Scores the listed segments of a feature set, in the given order.
pub fn score(model: &TrainedModel, set: &FeatureSet, indices: &[usize]) -> Result<Vec<f64>> {
    if set.representation != model.spec.representation {
        return Err(Error::Data(format!(
            "model was trained on {} features, got {}",
            model.spec.representation, set.representation
        )));
    }
    if (set.steps, set.features) != (model.spec.steps, model.spec.features) {
        return Err(Error::Data(format!(
            "feature layout {} x {} does not match the model's {} x {}",
            set.steps, set.features, model.spec.steps, model.spec.features
        )));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= set.len()) {
        return Err(Error::Data(format!("segment {bad} outside a set of {}", set.len())));
    }
    score_raw(model, &set.select(indices))
}
