//! Deterministic federated-learning simulator for auxiliary
//! hard-parameter-sharing multi-task learning between one edge server and
//! a set of base stations, with analytic communication, energy, and
//! compute-time cost models and the usual comparison baselines.
//!
//! The crate is organized along the pipeline:
//!
//! - [`nn`]: tensors, 1D-CNN/dense layers, backprop, cross-entropy, flat
//!   parameter vectors.
//! - [`mtl`]: shared-trunk multi-task model, composite loss, equal/random
//!   loss weighting, local SGD.
//! - [`data`]: CSV ingestion, quantile-derived auxiliary labels, splits,
//!   IID/Dirichlet station partitioning, synthetic generator.
//! - [`fl`]: the round protocol (broadcast, local train, collect,
//!   aggregate), evaluation, and baseline orchestration.
//! - [`cost`]: closed-form time/energy/communication models and the run
//!   ledger.
//!
//! Every source of randomness is derived from one master seed (see
//! [`rng`]), so identical configurations replay bit-for-bit.

pub mod cost;
pub mod data;
pub mod error;
pub mod fl;
pub mod mtl;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
