//! End-to-end dataset preparation: split, fit auxiliary bins on the
//! training portion only, and assemble the three splits with labels
//! attached.

use crate::data::flows::{FlowSample, LoadedFlows};
use crate::data::labels::QuantileBins;
use crate::data::split::{split_indices, SplitRatios};
use crate::data::synth::{synth_generate, SynthSpec};
use crate::error::{Error, Result};

/// A ready-to-train dataset: the three splits, the feature width, and the
/// order in which auxiliary labels are stored on every sample.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub feature_len: usize,
    pub aux_ids: Vec<String>,
    pub train: Vec<FlowSample>,
    pub validation: Vec<FlowSample>,
    pub test: Vec<FlowSample>,
}

/// Which raw column an auxiliary task bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxColumn {
    Duration,
    Bandwidth,
}

/// An auxiliary task to derive from a raw column.
#[derive(Debug, Clone)]
pub struct AuxDerivation {
    pub task_id: String,
    pub column: AuxColumn,
    pub n_bins: usize,
}

pub fn prepare_synth(
    spec: &SynthSpec,
    aux_ids: &[String],
    ratios: SplitRatios,
    seed: u64,
) -> Result<PreparedData> {
    if aux_ids.len() != spec.aux_classes.len() {
        return Err(Error::config(format!(
            "{} auxiliary ids for {} auxiliary tasks",
            aux_ids.len(),
            spec.aux_classes.len()
        )));
    }
    let samples = synth_generate(spec, seed)?;
    let (ti, vi, si) = split_indices(samples.len(), ratios, seed)?;
    let take = |idx: &[usize]| idx.iter().map(|i| samples[*i].clone()).collect();
    Ok(PreparedData {
        feature_len: spec.feature_len,
        aux_ids: aux_ids.to_vec(),
        train: take(&ti),
        validation: take(&vi),
        test: take(&si),
    })
}

/// Splits loaded flows, fits each auxiliary task's quantile bins on the
/// training rows only, and labels all three splits with the frozen bins.
pub fn prepare_csv(
    loaded: &LoadedFlows,
    derivations: &[AuxDerivation],
    ratios: SplitRatios,
    seed: u64,
) -> Result<(PreparedData, Vec<(String, QuantileBins)>)> {
    let (ti, vi, si) = split_indices(loaded.samples.len(), ratios, seed)?;

    let column = |c: AuxColumn| -> &[f64] {
        match c {
            AuxColumn::Duration => &loaded.duration,
            AuxColumn::Bandwidth => &loaded.bandwidth,
        }
    };
    let mut bins = Vec::with_capacity(derivations.len());
    for d in derivations {
        let train_values: Vec<f64> = ti.iter().map(|i| column(d.column)[*i]).collect();
        let fitted = QuantileBins::fit(&train_values, d.n_bins)
            .map_err(|e| Error::config(format!("auxiliary task {:?}: {}", d.task_id, e)))?;
        bins.push((d.task_id.clone(), fitted));
    }

    let take = |idx: &[usize]| -> Vec<FlowSample> {
        idx.iter()
            .map(|i| {
                let mut s = loaded.samples[*i].clone();
                s.aux_labels = derivations
                    .iter()
                    .zip(&bins)
                    .map(|(d, (_, b))| b.assign(column(d.column)[*i]))
                    .collect();
                s
            })
            .collect()
    };
    let data = PreparedData {
        feature_len: loaded.feature_len,
        aux_ids: derivations.iter().map(|d| d.task_id.clone()).collect(),
        train: take(&ti),
        validation: take(&vi),
        test: take(&si),
    };
    Ok((data, bins))
}
