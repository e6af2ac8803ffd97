//! Flow ingestion, auxiliary-label derivation, splitting, station
//! partitioning, and the synthetic generator.

mod flows;
mod labels;
mod partition;
mod prepare;
mod split;
mod synth;

pub use flows::{load_flows, load_flows_path, CsvSchema, FlowSample, LoadedFlows};
pub use labels::QuantileBins;
pub use partition::{materialize_shards, partition, PartitionMode, PartitionPlan};
pub use prepare::{prepare_csv, prepare_synth, AuxColumn, AuxDerivation, PreparedData};
pub use split::{split, split_indices, DatasetSplit, SplitRatios};
pub use synth::{synth_generate, SynthSpec};
