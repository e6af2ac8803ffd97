//! Assigning the training split to base stations.
//!
//! Two modes: `iid` (class-stratified round-robin, near-identical label
//! mix everywhere) and `dirichlet` (per-class station proportions drawn
//! from Dirichlet(alpha), the standard label-skew instrument). Both are
//! seeded and always produce disjoint, covering, non-empty shards.

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_distr::Gamma;
use serde::{Deserialize, Serialize};

use crate::data::flows::FlowSample;
use crate::error::{Error, Result};
use crate::rng::{stream, StreamTag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PartitionMode {
    Iid,
    Dirichlet { alpha: f64 },
}

/// The realized partition: per-station index lists into the train split,
/// plus everything needed to replay it. Serializes as the manifest JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    #[serde(flatten)]
    pub mode: PartitionMode,
    pub seed: u64,
    pub stations: usize,
    pub shards: Vec<Vec<usize>>,
}

pub fn partition(
    train: &[FlowSample],
    mode: PartitionMode,
    stations: usize,
    seed: u64,
) -> Result<PartitionPlan> {
    if stations == 0 {
        return Err(Error::config("need at least one station"));
    }
    if stations > train.len() {
        return Err(Error::config(format!(
            "cannot give {} stations non-empty shards from {} samples",
            stations,
            train.len()
        )));
    }
    if let PartitionMode::Dirichlet { alpha } = mode {
        if alpha <= 0.0 || alpha.is_nan() {
            return Err(Error::config("dirichlet alpha must be positive"));
        }
    }
    let mut rng = stream(seed, StreamTag::Partition, 0, 0);
    let classes = train.iter().map(|s| s.main_label).max().unwrap_or(0) + 1;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, s) in train.iter().enumerate() {
        by_class[s.main_label].push(i);
    }

    let mut shards: Vec<Vec<usize>> = vec![Vec::new(); stations];
    match mode {
        PartitionMode::Iid => {
            let mut cursor = 0usize;
            for class_indices in &mut by_class {
                class_indices.shuffle(&mut rng);
                for idx in class_indices.iter() {
                    shards[cursor % stations].push(*idx);
                    cursor += 1;
                }
            }
        }
        PartitionMode::Dirichlet { alpha } => {
            let gamma = Gamma::new(alpha, 1.0)
                .map_err(|e| Error::config(format!("dirichlet alpha: {}", e)))?;
            for class_indices in &mut by_class {
                class_indices.shuffle(&mut rng);
                let mut props: Vec<f64> = (0..stations).map(|_| gamma.sample(&mut rng)).collect();
                let total: f64 = props.iter().sum();
                if total <= 0.0 || total.is_nan() {
                    // all-zero gamma draws are possible for tiny alpha
                    props = vec![1.0; stations];
                }
                let pick = WeightedIndex::new(&props)
                    .map_err(|e| Error::internal(format!("station weights: {}", e)))?;
                for idx in class_indices.iter() {
                    shards[pick.sample(&mut rng)].push(*idx);
                }
            }
            repair_empty_shards(&mut shards);
        }
    }
    for shard in &mut shards {
        shard.sort_unstable();
    }
    debug_assert!(shards.iter().all(|s| !s.is_empty()));
    Ok(PartitionPlan {
        mode,
        seed,
        stations,
        shards,
    })
}

/// Moves one sample at a time from the currently largest shard into each
/// empty one. Deterministic: largest shard wins ties by lowest index and
/// donates its last element.
fn repair_empty_shards(shards: &mut [Vec<usize>]) {
    loop {
        let Some(empty) = shards.iter().position(|s| s.is_empty()) else {
            return;
        };
        let donor = shards
            .iter()
            .enumerate()
            .max_by(|(ai, a), (bi, b)| a.len().cmp(&b.len()).then(bi.cmp(ai)))
            .map(|(i, _)| i)
            .expect("at least one shard");
        if shards[donor].len() <= 1 {
            // nothing left to move; caller guaranteed stations <= samples
            return;
        }
        let moved = shards[donor].pop().expect("donor non-empty");
        shards[empty].push(moved);
    }
}

/// Extracts per-station sample lists from a plan.
pub fn materialize_shards(train: &[FlowSample], plan: &PartitionPlan) -> Vec<Vec<FlowSample>> {
    plan.shards
        .iter()
        .map(|idx| idx.iter().map(|i| train[*i].clone()).collect())
        .collect()
}
