//! Local mini-batch SGD over a station's shard.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::FlowSample;
use crate::error::{Error, Result};
use crate::mtl::model::{composite_loss, effective_weights, scope_size, HardSharedModel};
use crate::mtl::weighting::{
    elw_weights, sample_rlw, ObjectiveMode, RlwResample, WeightingKind, WeightingStrategy,
};
use crate::nn::{ParamVector, Tensor};

/// Where each model task reads its label from in a `FlowSample`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    Main,
    Aux(usize),
}

pub fn label_of(sample: &FlowSample, source: LabelSource) -> usize {
    match source {
        LabelSource::Main => sample.main_label,
        LabelSource::Aux(i) => sample.aux_labels[i],
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LocalTrainConfig {
    pub eta: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

pub struct LocalTrainOutcome {
    pub params: ParamVector,
    /// `epoch_losses[e][t]` is the mean over that epoch's batches of task
    /// `t`'s batch-mean cross-entropy.
    pub epoch_losses: Vec<Vec<f64>>,
    /// Mini-batch SGD steps actually executed.
    pub iterations: u64,
}

/// Packs samples into a batched input tensor shaped by the model input.
pub fn batch_tensor(model_input: &[usize], samples: &[&FlowSample]) -> Result<Tensor> {
    let per: usize = model_input.iter().product();
    let mut values = Vec::with_capacity(samples.len() * per);
    for s in samples {
        if s.features.len() != per {
            return Err(Error::config(format!(
                "sample has {} features but the model consumes {:?}",
                s.features.len(),
                model_input
            )));
        }
        values.extend_from_slice(&s.features);
    }
    let mut shape = vec![samples.len()];
    shape.extend_from_slice(model_input);
    Ok(Tensor::new(shape, values))
}

/// Runs `epochs` passes of shuffled mini-batch SGD and returns the final
/// parameters plus per-epoch loss traces. Under RLW the scope weights are
/// redrawn at the configured granularity (per mini-batch by default).
#[allow(clippy::too_many_arguments)]
pub fn local_train<R: Rng>(
    model: &HardSharedModel,
    start: &ParamVector,
    shard: &[FlowSample],
    label_map: &[LabelSource],
    cfg: LocalTrainConfig,
    strategy: WeightingStrategy,
    mode: ObjectiveMode,
    rng: &mut R,
) -> Result<LocalTrainOutcome> {
    if shard.is_empty() {
        return Err(Error::config("station shard is empty"));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::config("batch size and epochs must be at least 1"));
    }
    if label_map.len() != model.num_tasks() {
        return Err(Error::internal("label map does not align with model tasks"));
    }
    let tasks: Vec<_> = model.tasks().cloned().collect();
    let scope = scope_size(&tasks, mode);
    // ELW weights are constant; RLW draws once per round, epoch, or batch
    let fixed_weights = match (strategy.kind, strategy.resample) {
        (WeightingKind::Elw, _) => Some(elw_weights(mode, scope)),
        (WeightingKind::Rlw, RlwResample::PerRound) => Some(sample_rlw(rng, scope)),
        (WeightingKind::Rlw, _) => None,
    };

    let mut params = start.clone();
    let mut order: Vec<usize> = (0..shard.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut iterations = 0u64;
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        let epoch_weights = match (&fixed_weights, strategy.resample) {
            (Some(w), _) => Some(w.clone()),
            (None, RlwResample::PerEpoch) => Some(sample_rlw(rng, scope)),
            (None, _) => None,
        };
        let mut task_sums = vec![0.0; tasks.len()];
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let scope_weights = match &epoch_weights {
                Some(w) => w.clone(),
                None => sample_rlw(rng, scope),
            };
            let weights = effective_weights(&tasks, &scope_weights, mode)?;

            let rows: Vec<&FlowSample> = chunk.iter().map(|i| &shard[*i]).collect();
            let x = batch_tensor(model.input_shape(), &rows)?;
            let labels: Vec<Vec<usize>> = label_map
                .iter()
                .map(|src| rows.iter().map(|s| label_of(s, *src)).collect())
                .collect();
            let (logits, cache) = model.forward(&params, &x)?;
            let (losses, grads) = model.backward(&params, &logits, &cache, &labels, &weights)?;
            let total = composite_loss(&tasks, &losses, &scope_weights, mode)?;
            if !total.is_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    batch: batches,
                });
            }
            params.sgd_step(&grads, cfg.eta)?;
            iterations += 1;
            for (acc, l) in task_sums.iter_mut().zip(&losses) {
                *acc += *l;
            }
            batches += 1;
        }
        epoch_losses.push(task_sums.into_iter().map(|s| s / batches as f64).collect());
    }
    Ok(LocalTrainOutcome {
        params,
        epoch_losses,
        iterations,
    })
}
