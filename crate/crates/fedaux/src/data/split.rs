//! Seeded train/validation/test splitting.

use rand::seq::SliceRandom;

use crate::data::flows::FlowSample;
use crate::error::{Error, Result};
use crate::rng::{stream, StreamTag};

/// Fractions of the whole dataset; must sum to 1. A zero validation ratio
/// yields an empty validation split, which is legal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let sum = self.train + self.validation + self.test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("split ratios sum to {}, not 1", sum)));
        }
        if self.train <= 0.0 || self.test <= 0.0 || self.validation < 0.0 {
            return Err(Error::config(
                "train and test ratios must be positive, validation non-negative",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<FlowSample>,
    pub validation: Vec<FlowSample>,
    pub test: Vec<FlowSample>,
}

/// Index-level split: seeded shuffle, then contiguous cuts with
/// `floor(ratio * n)` sizes for train and validation; test takes the rest.
pub fn split_indices(
    n: usize,
    ratios: SplitRatios,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    ratios.validate()?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, StreamTag::Split, 0, 0));
    let n_train = (ratios.train * n as f64).floor() as usize;
    let n_val = (ratios.validation * n as f64).floor() as usize;
    let n_test = n.saturating_sub(n_train + n_val);
    if n_train == 0 || n_test == 0 || (ratios.validation > 0.0 && n_val == 0) {
        return Err(Error::config(format!(
            "split of {} samples at {:?} leaves an empty split",
            n, ratios
        )));
    }
    let train = order[..n_train].to_vec();
    let validation = order[n_train..n_train + n_val].to_vec();
    let test = order[n_train + n_val..].to_vec();
    Ok((train, validation, test))
}

pub fn split(samples: Vec<FlowSample>, ratios: SplitRatios, seed: u64) -> Result<DatasetSplit> {
    let (ti, vi, si) = split_indices(samples.len(), ratios, seed)?;
    let take = |idx: &[usize]| idx.iter().map(|i| samples[*i].clone()).collect();
    Ok(DatasetSplit {
        train: take(&ti),
        validation: take(&vi),
        test: take(&si),
    })
}
