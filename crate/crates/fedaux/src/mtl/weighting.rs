//! Loss-weighting strategies for the composite objective.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingKind {
    /// Equal loss weighting: fixed uniform weights over the scope.
    Elw,
    /// Random loss weighting: softmax of i.i.d. standard normals, redrawn
    /// during training at the configured granularity.
    Rlw,
}

/// Which tasks the weights range over. The auxiliary-prioritizing objective
/// weights auxiliary tasks only (main task fixed at 1); the conventional
/// multi-task objective weights all tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveMode {
    FedAux,
    Mtdnn,
    SingleTask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RlwResample {
    #[default]
    PerBatch,
    PerEpoch,
    PerRound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightingStrategy {
    pub kind: WeightingKind,
    pub resample: RlwResample,
}

impl WeightingStrategy {
    pub fn elw() -> Self {
        Self {
            kind: WeightingKind::Elw,
            resample: RlwResample::PerBatch,
        }
    }

    pub fn rlw(resample: RlwResample) -> Self {
        Self {
            kind: WeightingKind::Rlw,
            resample,
        }
    }
}

/// Stable softmax onto the simplex: sums to 1, every component positive.
pub fn softmax_weights(raw: &[f64]) -> Vec<f64> {
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = raw.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// One random-loss-weighting draw over `n` tasks: i.i.d. standard normals
/// pushed through softmax.
pub fn sample_rlw<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    assert!(n >= 1, "weight vector needs at least one task");
    let raw: Vec<f64> = (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    softmax_weights(&raw)
}

/// Uniform simplex weights over `n` tasks; the expectation of an RLW draw.
pub fn uniform_weights(n: usize) -> Vec<f64> {
    assert!(n >= 1);
    vec![1.0 / n as f64; n]
}

/// The fixed equal-loss-weighting vector for a scope of `n` tasks.
///
/// Under the auxiliary-prioritizing objective the auxiliary tasks share
/// one unit of weight (1/B each) next to the main task's fixed 1. The
/// conventional all-task objective is a plain task-loss sum, so every
/// task gets unit weight there.
pub fn elw_weights(mode: ObjectiveMode, n: usize) -> Vec<f64> {
    match mode {
        ObjectiveMode::FedAux => uniform_weights(n),
        ObjectiveMode::Mtdnn | ObjectiveMode::SingleTask => vec![1.0; n],
    }
}

/// Deterministic stand-in for a strategy's weights when evaluating
/// metrics: ELW's own fixed vector, or the expectation of an RLW draw.
pub fn expected_weights(kind: WeightingKind, mode: ObjectiveMode, n: usize) -> Vec<f64> {
    match kind {
        WeightingKind::Elw => elw_weights(mode, n),
        WeightingKind::Rlw => uniform_weights(n),
    }
}
