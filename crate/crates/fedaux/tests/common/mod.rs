//! Shared fixtures for the integration tests.

use fedaux::data::{prepare_synth, PreparedData, SplitRatios, SynthSpec};
use fedaux::error::Result;
use fedaux::mtl::{HardSharedModel, TaskRole, TaskSpec};
use fedaux::nn::{LayerSpec, LayerStack};

pub fn task(id: &str, role: TaskRole, num_classes: usize) -> TaskSpec {
    TaskSpec {
        id: id.into(),
        role,
        num_classes,
    }
}

/// The three-task layout used across the protocol tests: one 5-class main
/// task, two 3-class auxiliary tasks.
pub fn three_tasks() -> Vec<TaskSpec> {
    vec![
        task("service", TaskRole::Main, 5),
        task("duration", TaskRole::Auxiliary, 3),
        task("bandwidth", TaskRole::Auxiliary, 3),
    ]
}

pub const FEATURE_LEN: usize = 16;

/// Small 1D-CNN: conv -> relu -> pool -> flatten -> dense -> relu trunk,
/// one dense head per task.
pub fn build_model(tasks: &[TaskSpec]) -> Result<HardSharedModel> {
    let trunk = LayerStack::new(
        vec![1, FEATURE_LEN],
        vec![
            LayerSpec::Conv1d {
                in_channels: 1,
                out_channels: 6,
                kernel_size: 3,
                stride: 1,
            },
            LayerSpec::Relu,
            LayerSpec::MaxPool1d { pool_size: 2 },
            LayerSpec::Flatten,
            LayerSpec::Dense {
                in_features: 42,
                out_features: 24,
            },
            LayerSpec::Relu,
        ],
    )?;
    let heads = tasks
        .iter()
        .map(|t| {
            Ok((
                t.clone(),
                LayerStack::new(
                    vec![24],
                    vec![LayerSpec::Dense {
                        in_features: 24,
                        out_features: t.num_classes,
                    }],
                )?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    HardSharedModel::new(trunk, heads)
}

pub fn small_dataset(samples: usize, seed: u64) -> PreparedData {
    let spec = SynthSpec {
        main_classes: 5,
        aux_classes: vec![3, 3],
        samples,
        feature_len: FEATURE_LEN,
        feature_noise: 1.0,
        aux_label_noise: 0.05,
    };
    prepare_synth(
        &spec,
        &["duration".into(), "bandwidth".into()],
        SplitRatios {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        },
        seed,
    )
    .expect("synth dataset")
}
