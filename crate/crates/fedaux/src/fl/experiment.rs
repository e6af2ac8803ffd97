//! Baseline orchestration: assembling stations, models, and ledgers for a
//! named training variant and running it end to end.

use crate::cost::{shard_bits, CostLedger, DeviceProfile};
use crate::data::{materialize_shards, partition, PartitionMode, PartitionPlan, PreparedData};
use crate::error::{Error, Result};
use crate::fl::round::{FlRun, RoundConfig, RoundMetrics};
use crate::fl::server::{BaseStation, EdgeServer};
use crate::mtl::{
    HardSharedModel, LabelSource, ObjectiveMode, RlwResample, TaskRole, TaskSpec, WeightingKind,
    WeightingStrategy,
};
use crate::nn::ParamVector;
use crate::rng::{stream, StreamTag};

/// The training variants the simulator compares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Baseline {
    /// Auxiliary-prioritizing objective, random loss weighting.
    FedAuxRlw,
    /// Auxiliary-prioritizing objective, equal loss weighting.
    FedAuxElw,
    /// Conventional all-task objective, random loss weighting.
    MtdnnRlw,
    /// Conventional all-task objective, equal loss weighting.
    MtdnnElw,
    /// Single-task federated averaging; `None` means the main task.
    FedAvgSingle(Option<String>),
    /// Auxiliary-prioritizing RLW over an IID partition (the upper bound).
    BaselineIid,
}

impl Baseline {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fedaux-rlw" => Ok(Baseline::FedAuxRlw),
            "fedaux-elw" => Ok(Baseline::FedAuxElw),
            "mtdnn-rlw" => Ok(Baseline::MtdnnRlw),
            "mtdnn-elw" => Ok(Baseline::MtdnnElw),
            "baseline-iid" => Ok(Baseline::BaselineIid),
            "fedavg-single" => Ok(Baseline::FedAvgSingle(None)),
            other => match other.strip_prefix("fedavg-single:") {
                Some(task) if !task.is_empty() => {
                    Ok(Baseline::FedAvgSingle(Some(task.to_string())))
                }
                _ => Err(Error::config(format!("unknown baseline {:?}", other))),
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            Baseline::FedAuxRlw => "fedaux-rlw".into(),
            Baseline::FedAuxElw => "fedaux-elw".into(),
            Baseline::MtdnnRlw => "mtdnn-rlw".into(),
            Baseline::MtdnnElw => "mtdnn-elw".into(),
            Baseline::FedAvgSingle(None) => "fedavg-single".into(),
            Baseline::FedAvgSingle(Some(task)) => format!("fedavg-single:{}", task),
            Baseline::BaselineIid => "baseline-iid".into(),
        }
    }

    /// File-system-safe name for output directories.
    pub fn dir_name(&self) -> String {
        self.name().replace(':', "_")
    }

    pub fn mode(&self) -> ObjectiveMode {
        match self {
            Baseline::FedAuxRlw | Baseline::FedAuxElw | Baseline::BaselineIid => {
                ObjectiveMode::FedAux
            }
            Baseline::MtdnnRlw | Baseline::MtdnnElw => ObjectiveMode::Mtdnn,
            Baseline::FedAvgSingle(_) => ObjectiveMode::SingleTask,
        }
    }

    pub fn weighting(&self, resample: RlwResample) -> WeightingStrategy {
        let kind = match self {
            Baseline::FedAuxRlw | Baseline::MtdnnRlw | Baseline::BaselineIid => WeightingKind::Rlw,
            _ => WeightingKind::Elw,
        };
        WeightingStrategy { kind, resample }
    }
}

/// Per-station compute characteristics shared by all stations; the shard
/// bit length is filled in from the realized shard.
#[derive(Debug, Clone, Copy)]
pub struct DeviceTemplate {
    pub cycles_per_bit: f64,
    pub cpu_freq_hz: f64,
    pub capacitance_coeff: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CostConvention {
    pub bytes_per_param: u64,
    pub mb_definition: u64,
}

/// Everything a single baseline run needs besides the model itself.
pub struct ExperimentSpec<'a> {
    pub tasks: &'a [TaskSpec],
    pub data: &'a PreparedData,
    pub stations: usize,
    pub partition: PartitionMode,
    pub round_cfg: RoundConfig,
    pub rlw_resample: RlwResample,
    pub device: DeviceTemplate,
    pub cost: CostConvention,
}

pub struct ExperimentOutput {
    pub baseline: String,
    pub metrics: Vec<RoundMetrics>,
    pub ledger: CostLedger,
    pub final_params: ParamVector,
    pub partition: PartitionPlan,
    pub model_params: usize,
}

/// Tasks the baseline actually trains: the declared list, or the one task
/// a single-task run is restricted to.
pub fn baseline_tasks(tasks: &[TaskSpec], baseline: &Baseline) -> Result<Vec<TaskSpec>> {
    match baseline {
        Baseline::FedAvgSingle(which) => {
            let task = match which {
                Some(id) => tasks.iter().find(|t| t.id == *id).ok_or_else(|| {
                    Error::config(format!("baseline names unknown task {:?}", id))
                })?,
                None => tasks
                    .iter()
                    .find(|t| t.role == TaskRole::Main)
                    .ok_or_else(|| Error::config("no main task declared"))?,
            };
            Ok(vec![task.clone()])
        }
        _ => Ok(tasks.to_vec()),
    }
}

/// Maps every model task to where its label lives in a `FlowSample`.
pub fn build_label_map(tasks: &[TaskSpec], aux_ids: &[String]) -> Result<Vec<LabelSource>> {
    tasks
        .iter()
        .map(|t| match t.role {
            TaskRole::Main => Ok(LabelSource::Main),
            TaskRole::Auxiliary => aux_ids
                .iter()
                .position(|id| *id == t.id)
                .map(LabelSource::Aux)
                .ok_or_else(|| {
                    Error::config(format!("task {:?} has no label column in the data", t.id))
                }),
        })
        .collect()
}

/// Runs one baseline for `round_cfg.rounds` rounds. `factory` builds the
/// (possibly single-head) model for a task list; the run is fully
/// determined by `round_cfg.seed`.
pub fn run_experiment(
    spec: &ExperimentSpec,
    factory: &dyn Fn(&[TaskSpec]) -> Result<HardSharedModel>,
    baseline: &Baseline,
    mut sink: impl FnMut(&RoundMetrics),
) -> Result<ExperimentOutput> {
    let model_tasks = baseline_tasks(spec.tasks, baseline)?;
    let model = factory(&model_tasks)?;
    if model.num_tasks() != model_tasks.len() {
        return Err(Error::internal("factory dropped tasks"));
    }
    let label_map = build_label_map(&model_tasks, &spec.data.aux_ids)?;

    let mode = if *baseline == Baseline::BaselineIid {
        PartitionMode::Iid
    } else {
        spec.partition
    };
    let plan = partition(&spec.data.train, mode, spec.stations, spec.round_cfg.seed)?;
    let shards = materialize_shards(&spec.data.train, &plan);

    let mut ledger = CostLedger::new(spec.cost.bytes_per_param, spec.cost.mb_definition);
    let labels_per_sample = 1 + spec.data.aux_ids.len();
    let mut stations = Vec::with_capacity(spec.stations);
    for (id, shard) in shards.into_iter().enumerate() {
        let profile = DeviceProfile::new(
            spec.device.cycles_per_bit,
            spec.device.cpu_freq_hz,
            spec.device.capacitance_coeff,
            shard_bits(shard.len(), spec.data.feature_len, labels_per_sample),
        )?;
        let iterations_per_round =
            spec.round_cfg.epochs as u64 * shard.len().div_ceil(spec.round_cfg.batch_size) as u64;
        ledger.register_station(id, profile, iterations_per_round);
        stations.push(BaseStation {
            id,
            shard,
            params: ParamVector::zeros(model.param_count()),
        });
    }

    let initial = model.init_params(&mut stream(spec.round_cfg.seed, StreamTag::ParamInit, 0, 0));
    let run = FlRun {
        model: &model,
        label_map,
        stations,
        server: EdgeServer::new(initial),
        cfg: spec.round_cfg,
        strategy: baseline.weighting(spec.rlw_resample),
        mode: baseline.mode(),
        ledger,
        validation: &spec.data.validation,
        test: &spec.data.test,
    };
    let out = run.run(&mut sink)?;
    Ok(ExperimentOutput {
        baseline: baseline.name(),
        metrics: out.metrics,
        ledger: out.ledger,
        final_params: out.final_params,
        partition: plan,
        model_params: model.param_count(),
    })
}
