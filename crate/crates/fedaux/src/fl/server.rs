//! Edge-server state: the global parameter vector, participant selection,
//! and data-size-weighted aggregation of station updates.

use rand::Rng;

use crate::data::FlowSample;
use crate::error::{Error, Result};
use crate::fl::wmean::weighted_mean_columns;
use crate::nn::ParamVector;

/// A simulated base station: its private shard, current local parameters,
/// and cost identity. Station rng streams are derived per round by the
/// round driver, not stored here.
pub struct BaseStation {
    pub id: usize,
    pub shard: Vec<FlowSample>,
    pub params: ParamVector,
}

impl BaseStation {
    pub fn data_size(&self) -> usize {
        self.shard.len()
    }
}

pub struct EdgeServer {
    pub global: ParamVector,
    pub round: usize,
}

impl EdgeServer {
    pub fn new(initial: ParamVector) -> Self {
        Self {
            global: initial,
            round: 0,
        }
    }
}

/// Copies the current global parameters into every roster station.
pub fn broadcast(server: &EdgeServer, stations: &mut [BaseStation]) {
    for station in stations.iter_mut() {
        station.params = server.global.clone();
    }
}

/// Chooses the participating subset for a round: `round(fraction * n)`
/// stations sampled without replacement, returned in ascending id order.
pub fn select_participants<R: Rng>(
    rng: &mut R,
    roster: usize,
    fraction: f64,
) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::config(format!(
            "participation fraction {} outside (0, 1]",
            fraction
        )));
    }
    let k = (fraction * roster as f64).round() as usize;
    if k == 0 {
        return Err(Error::config(format!(
            "participation {} of {} stations selects nobody",
            fraction, roster
        )));
    }
    if k >= roster {
        return Ok((0..roster).collect());
    }
    let mut ids: Vec<usize> = (0..roster).collect();
    for i in 0..k {
        let j = rng.random_range(i..roster);
        ids.swap(i, j);
    }
    let mut chosen = ids[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Data-size-weighted average of the participants' parameter vectors.
///
/// Every coordinate is the correctly rounded value of
/// `sum(D_u * theta_u) / sum(D_u)`, so aggregating identical vectors is an
/// exact identity and every coordinate stays within the participants'
/// bounds.
pub fn aggregate(updates: &[(usize, &ParamVector)]) -> Result<ParamVector> {
    let Some(((_, first), rest)) = updates.split_first() else {
        return Err(Error::internal("aggregation over an empty participant set"));
    };
    let len = first.len();
    for (d, v) in updates {
        if v.len() != len {
            return Err(Error::internal(format!(
                "update length {} != {}",
                v.len(),
                len
            )));
        }
        if *d == 0 {
            return Err(Error::internal("station data size must be at least 1"));
        }
    }
    let _ = rest;
    let weights: Vec<f64> = updates.iter().map(|(d, _)| *d as f64).collect();
    let vectors: Vec<&[f64]> = updates.iter().map(|(_, v)| v.as_slice()).collect();
    let mut out = vec![0.0; len];
    weighted_mean_columns(&weights, &vectors, &mut out);
    Ok(ParamVector::new(out))
}
