//! Synthetic multi-task flow generator for desk-scale, fully reproducible
//! runs.
//!
//! Each main class gets a Gaussian prototype vector; a sample is its class
//! prototype plus feature noise. Auxiliary labels are deterministic
//! coarsenings of the main class: classes are ranked by one latent
//! prototype coordinate per auxiliary task and grouped into that task's
//! bins, optionally corrupted by label-flip noise. Auxiliary tasks
//! therefore carry real information about the main task.

use rand::prelude::*;
use rand_distr::StandardNormal;

use crate::data::flows::FlowSample;
use crate::error::{Error, Result};
use crate::rng::{stream, StreamTag};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub main_classes: usize,
    /// Class count per auxiliary task, in task order.
    pub aux_classes: Vec<usize>,
    pub samples: usize,
    pub feature_len: usize,
    /// Std-dev of the additive feature noise.
    pub feature_noise: f64,
    /// Probability that an auxiliary label is replaced by a uniform draw.
    pub aux_label_noise: f64,
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.main_classes < 2 {
            return Err(Error::config("synth: need at least 2 main classes"));
        }
        if self.aux_classes.iter().any(|k| *k < 2) {
            return Err(Error::config(
                "synth: every auxiliary task needs >= 2 classes",
            ));
        }
        if self.samples < self.main_classes {
            return Err(Error::config("synth: fewer samples than main classes"));
        }
        if self.feature_len == 0 {
            return Err(Error::config("synth: feature_len must be positive"));
        }
        if self.feature_noise < 0.0 || !(0.0..=1.0).contains(&self.aux_label_noise) {
            return Err(Error::config("synth: bad noise settings"));
        }
        Ok(())
    }
}

pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<Vec<FlowSample>> {
    spec.validate()?;
    let mut rng = stream(seed, StreamTag::Synth, 0, 0);

    let prototypes: Vec<Vec<f64>> = (0..spec.main_classes)
        .map(|_| {
            (0..spec.feature_len)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();

    // class -> auxiliary label, per task: rank classes by one latent
    // prototype coordinate and cut the ranking into k groups
    let aux_maps: Vec<Vec<usize>> = spec
        .aux_classes
        .iter()
        .enumerate()
        .map(|(t, k)| {
            let coord = t % spec.feature_len;
            let mut order: Vec<usize> = (0..spec.main_classes).collect();
            order.sort_by(|a, b| {
                prototypes[*a][coord]
                    .partial_cmp(&prototypes[*b][coord])
                    .unwrap()
            });
            let mut map = vec![0usize; spec.main_classes];
            for (rank, class) in order.iter().enumerate() {
                map[*class] = rank * k / spec.main_classes;
            }
            map
        })
        .collect();

    let mut samples = Vec::with_capacity(spec.samples);
    for i in 0..spec.samples {
        let class = i % spec.main_classes;
        let features: Vec<f64> = prototypes[class]
            .iter()
            .map(|p| p + spec.feature_noise * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let aux_labels: Vec<usize> = aux_maps
            .iter()
            .zip(&spec.aux_classes)
            .map(|(map, k)| {
                if spec.aux_label_noise > 0.0 && rng.random::<f64>() < spec.aux_label_noise {
                    rng.random_range(0..*k)
                } else {
                    map[class]
                }
            })
            .collect();
        samples.push(FlowSample {
            features,
            main_label: class,
            aux_labels,
        });
    }
    Ok(samples)
}
