//! One communication round: broadcast, local training on the selected
//! participants, collection, aggregation, and evaluation.

use std::time::Instant;

use serde::Serialize;

use crate::cost::CostLedger;
use crate::data::FlowSample;
use crate::error::{Error, Result};
use crate::fl::server::{aggregate, broadcast, select_participants, BaseStation, EdgeServer};
use crate::mtl::{
    batch_tensor, composite_loss, expected_weights, label_of, local_train, scope_size,
    HardSharedModel, LabelSource, LocalTrainConfig, ObjectiveMode, WeightingKind,
    WeightingStrategy,
};
use crate::nn::{argmax_rows, softmax_cross_entropy, ParamVector};
use crate::rng::{stream, StreamTag};

const EVAL_CHUNK: usize = 512;

#[derive(Debug, Clone, Copy)]
pub struct RoundConfig {
    pub rounds: usize,
    pub eta: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub participation: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Validation,
    Test,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskSplitEval {
    pub task_id: String,
    pub split: Split,
    pub accuracy: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub evals: Vec<TaskSplitEval>,
    pub total_global_loss: f64,
    pub comm_bytes_cum: u64,
    pub energy_j_cum: f64,
    pub modeled_s_cum: f64,
    /// Host wall clock for the round; informational only and excluded from
    /// the deterministic artifacts.
    pub wall_ms: f64,
}

impl RoundMetrics {
    pub fn accuracy(&self, task_id: &str, split: Split) -> Option<f64> {
        self.evals
            .iter()
            .find(|e| e.task_id == task_id && e.split == split)
            .map(|e| e.accuracy)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TaskEval {
    pub accuracy: f64,
    pub loss: f64,
}

/// Argmax accuracy and mean cross-entropy per task over `samples`,
/// evaluated in chunks. Parameters are not mutated.
pub fn evaluate(
    model: &HardSharedModel,
    params: &ParamVector,
    samples: &[FlowSample],
    label_map: &[LabelSource],
) -> Result<Vec<TaskEval>> {
    if samples.is_empty() {
        return Err(Error::config("cannot evaluate on an empty dataset"));
    }
    let n_tasks = model.num_tasks();
    let mut correct = vec![0usize; n_tasks];
    let mut loss_sums = vec![0.0; n_tasks];
    for chunk in samples.chunks(EVAL_CHUNK) {
        let rows: Vec<&FlowSample> = chunk.iter().collect();
        let x = batch_tensor(model.input_shape(), &rows)?;
        let (logits, _) = model.forward(params, &x)?;
        for t in 0..n_tasks {
            let labels: Vec<usize> = rows.iter().map(|s| label_of(s, label_map[t])).collect();
            let (mean_loss, _) = softmax_cross_entropy(&logits[t], &labels)?;
            loss_sums[t] += mean_loss * rows.len() as f64;
            for (pred, label) in argmax_rows(&logits[t]).into_iter().zip(&labels) {
                if pred == *label {
                    correct[t] += 1;
                }
            }
        }
    }
    let n = samples.len() as f64;
    Ok((0..n_tasks)
        .map(|t| TaskEval {
            accuracy: correct[t] as f64 / n,
            loss: loss_sums[t] / n,
        })
        .collect())
}

/// Data-size-weighted mean: `sum(sizes[i] * values[i]) / sum(sizes)`,
/// correctly rounded (so averaging equal values returns them exactly).
pub fn weighted_mean_by_size(sizes: &[usize], values: &[f64]) -> f64 {
    let weights: Vec<f64> = sizes.iter().map(|d| *d as f64).collect();
    let columns: Vec<&[f64]> = values.chunks(1).collect();
    let mut out = [0.0];
    crate::fl::wmean::weighted_mean_columns(&weights, &columns, &mut out);
    out[0]
}

/// The total global loss: data-size-weighted mean over stations of each
/// station's composite loss on its full shard.
///
/// Composite losses are evaluated with the strategy's expected weights
/// (ELW's fixed vector, or the expectation of an RLW draw), which keeps
/// the metric deterministic.
pub fn global_loss(
    model: &HardSharedModel,
    params: &ParamVector,
    stations: &[BaseStation],
    label_map: &[LabelSource],
    mode: ObjectiveMode,
    kind: WeightingKind,
) -> Result<f64> {
    let tasks: Vec<_> = model.tasks().cloned().collect();
    let expected = expected_weights(kind, mode, scope_size(&tasks, mode));
    let mut sizes = Vec::with_capacity(stations.len());
    let mut losses = Vec::with_capacity(stations.len());
    for station in stations {
        let evals = evaluate(model, params, &station.shard, label_map)?;
        let per_task: Vec<f64> = evals.iter().map(|e| e.loss).collect();
        losses.push(composite_loss(&tasks, &per_task, &expected, mode)?);
        sizes.push(station.data_size());
    }
    Ok(weighted_mean_by_size(&sizes, &losses))
}

/// Driver state for a full federated run.
pub struct FlRun<'a> {
    pub model: &'a HardSharedModel,
    pub label_map: Vec<LabelSource>,
    pub stations: Vec<BaseStation>,
    pub server: EdgeServer,
    pub cfg: RoundConfig,
    pub strategy: WeightingStrategy,
    pub mode: ObjectiveMode,
    pub ledger: CostLedger,
    pub validation: &'a [FlowSample],
    pub test: &'a [FlowSample],
}

impl FlRun<'_> {
    /// Executes one full round and reports the post-aggregation metrics.
    pub fn run_round(&mut self) -> Result<RoundMetrics> {
        let started = Instant::now();
        let round = self.server.round + 1;
        broadcast(&self.server, &mut self.stations);
        let participants = select_participants(
            &mut stream(
                self.cfg.seed,
                StreamTag::ParticipantSelection,
                round as u64,
                0,
            ),
            self.stations.len(),
            self.cfg.participation,
        )?;
        for u in &participants {
            let station = &mut self.stations[*u];
            let mut rng = stream(
                self.cfg.seed,
                StreamTag::StationRound,
                *u as u64,
                round as u64,
            );
            let outcome = local_train(
                self.model,
                &station.params,
                &station.shard,
                &self.label_map,
                LocalTrainConfig {
                    eta: self.cfg.eta,
                    batch_size: self.cfg.batch_size,
                    epochs: self.cfg.epochs,
                },
                self.strategy,
                self.mode,
                &mut rng,
            )
            .map_err(|e| match e {
                Error::NonFinite { .. } => Error::Numerical {
                    round,
                    station: *u,
                    detail: e.to_string(),
                },
                other => other,
            })?;
            debug_assert_eq!(
                outcome.iterations,
                self.ledger.stations[*u].iterations_per_round
            );
            station.params = outcome.params;
        }
        let updates: Vec<(usize, &ParamVector)> = participants
            .iter()
            .map(|u| (self.stations[*u].data_size(), &self.stations[*u].params))
            .collect();
        self.server.global = aggregate(&updates)?;
        self.server.round = round;
        self.ledger.log_round(
            round,
            participants,
            self.stations.len(),
            self.model.param_count(),
        );

        let mut evals = Vec::new();
        for (split, samples) in [
            (Split::Validation, self.validation),
            (Split::Test, self.test),
        ] {
            if samples.is_empty() {
                continue;
            }
            let per_task = evaluate(self.model, &self.server.global, samples, &self.label_map)?;
            for (task, eval) in self.model.tasks().zip(per_task) {
                evals.push(TaskSplitEval {
                    task_id: task.id.clone(),
                    split,
                    accuracy: eval.accuracy,
                    loss: eval.loss,
                });
            }
        }
        let total_global_loss = global_loss(
            self.model,
            &self.server.global,
            &self.stations,
            &self.label_map,
            self.mode,
            self.strategy.kind,
        )?;
        if !total_global_loss.is_finite() {
            return Err(Error::Numerical {
                round,
                station: usize::MAX,
                detail: "non-finite total global loss".into(),
            });
        }

        Ok(RoundMetrics {
            round,
            evals,
            total_global_loss,
            comm_bytes_cum: self.ledger.comm_bytes(),
            energy_j_cum: self.ledger.total_energy_j(),
            modeled_s_cum: self.ledger.modeled_elapsed_s(),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    }

    /// Runs all configured rounds, feeding each round's metrics to `sink`.
    pub fn run(mut self, mut sink: impl FnMut(&RoundMetrics)) -> Result<FlRunOutput> {
        let mut metrics = Vec::with_capacity(self.cfg.rounds);
        for _ in 0..self.cfg.rounds {
            let m = self.run_round()?;
            sink(&m);
            metrics.push(m);
        }
        Ok(FlRunOutput {
            metrics,
            ledger: self.ledger,
            final_params: self.server.global,
        })
    }
}

pub struct FlRunOutput {
    pub metrics: Vec<RoundMetrics>,
    pub ledger: CostLedger,
    pub final_params: ParamVector,
}
