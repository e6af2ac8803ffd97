//! The federated protocol engine: edge server, base stations, round
//! execution, aggregation, and baseline orchestration.

mod experiment;
mod round;
mod server;
mod wmean;

pub use experiment::{
    baseline_tasks, build_label_map, run_experiment, Baseline, CostConvention, DeviceTemplate,
    ExperimentOutput, ExperimentSpec,
};
pub use round::{
    evaluate, global_loss, weighted_mean_by_size, FlRun, FlRunOutput, RoundConfig, RoundMetrics,
    Split, TaskEval, TaskSplitEval,
};
pub use server::{aggregate, broadcast, select_participants, BaseStation, EdgeServer};
