//! The experiment configuration file: a strict JSON schema that fully
//! determines a run. Unknown keys are rejected so typos cannot silently
//! change an experiment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fedaux::data::{
    load_flows_path, prepare_csv, prepare_synth, AuxColumn, AuxDerivation, CsvSchema,
    PartitionMode, PreparedData, SplitRatios, SynthSpec,
};
use fedaux::error::{Error, Result};
use fedaux::fl::{Baseline, CostConvention, DeviceTemplate, ExperimentSpec, RoundConfig};
use fedaux::mtl::{HardSharedModel, RlwResample, TaskRole, TaskSpec};
use fedaux::nn::{LayerSpec, LayerStack};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub tasks: Vec<TaskSpec>,
    pub baselines: Vec<String>,
    pub rounds: RoundsConfig,
    pub stations: usize,
    pub partition: PartitionConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub device: DeviceConfig,
    #[serde(default)]
    pub cost: CostConfig,
    #[serde(default)]
    pub weighting: WeightingConfig,
    pub seed: u64,
}

/// Externally tagged so that strict field checking applies inside each
/// variant: `{"csv": {...}}` or `{"synth": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetConfig {
    Csv {
        path: PathBuf,
        #[serde(default)]
        class_names: Option<Vec<String>>,
        /// Auxiliary task id -> raw column it is binned from.
        aux_sources: BTreeMap<String, AuxColumnConfig>,
    },
    Synth {
        samples: usize,
        feature_len: usize,
        #[serde(default = "default_feature_noise")]
        feature_noise: f64,
        #[serde(default)]
        aux_label_noise: f64,
    },
}

fn default_feature_noise() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuxColumnConfig {
    Duration,
    Bandwidth,
}

impl From<AuxColumnConfig> for AuxColumn {
    fn from(c: AuxColumnConfig) -> Self {
        match c {
            AuxColumnConfig::Duration => AuxColumn::Duration,
            AuxColumnConfig::Bandwidth => AuxColumn::Bandwidth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_channels")]
    pub input_channels: usize,
    pub trunk: Vec<LayerConfig>,
    /// Hidden head layers; the final dense layer onto each task's classes
    /// is appended automatically.
    #[serde(default)]
    pub head: Vec<LayerConfig>,
}

fn default_channels() -> usize {
    1
}

/// One layer in the architecture list. Parameterized layers are written
/// as `{"conv1d": {...}}`, `{"max-pool1d": {...}}`, `{"dense": {...}}`;
/// parameter-free layers as the bare strings `"relu"` and `"flatten"`.
/// Input sizes are inferred from the previous layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum LayerConfig {
    Conv1d {
        out_channels: usize,
        kernel_size: usize,
        #[serde(default = "default_stride")]
        stride: usize,
    },
    Relu,
    MaxPool1d {
        pool_size: usize,
    },
    Flatten,
    Dense {
        out_features: usize,
    },
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundsConfig {
    pub rounds: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_participation")]
    pub participation: f64,
    /// Target test accuracy per task, used by the report.
    #[serde(default)]
    pub target_accuracy: BTreeMap<String, f64>,
}

fn default_eta() -> f64 {
    0.005
}
fn default_batch_size() -> usize {
    32
}
fn default_epochs() -> usize {
    20
}
fn default_participation() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub mode: PartitionModeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionModeName {
    Iid,
    Dirichlet,
}

impl PartitionConfig {
    pub fn to_mode(&self) -> Result<PartitionMode> {
        match (self.mode, self.alpha) {
            (PartitionModeName::Iid, None) => Ok(PartitionMode::Iid),
            (PartitionModeName::Iid, Some(_)) => Err(Error::config("iid partition takes no alpha")),
            (PartitionModeName::Dirichlet, Some(alpha)) => Ok(PartitionMode::Dirichlet { alpha }),
            (PartitionModeName::Dirichlet, None) => {
                Err(Error::config("dirichlet partition needs alpha"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        // 90/10 train/test with a tenth of the training allocation held
        // out for validation
        Self {
            train: 0.81,
            validation: 0.09,
            test: 0.10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub cycles_per_bit: f64,
    pub cpu_freq_hz: f64,
    pub capacitance_coeff: f64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            cycles_per_bit: 40.0,
            cpu_freq_hz: 2.0e9,
            capacitance_coeff: 2.0e-28,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub bytes_per_param: u64,
    pub mb_definition: u64,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            bytes_per_param: 4,
            mb_definition: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct WeightingConfig {
    #[serde(default)]
    pub rlw_resample: RlwResample,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::data(format!("cannot read {}: {}", path.display(), e)))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {}", path.display(), e)))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.stations == 0 {
            return Err(Error::config("need at least one station"));
        }
        let mains: Vec<&TaskSpec> = self
            .tasks
            .iter()
            .filter(|t| t.role == TaskRole::Main)
            .collect();
        if mains.len() != 1 {
            return Err(Error::config(format!(
                "exactly one main task required, found {}",
                mains.len()
            )));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if self.tasks[..i].iter().any(|o| o.id == t.id) {
                return Err(Error::config(format!("duplicate task id {:?}", t.id)));
            }
            if t.num_classes < 2 {
                return Err(Error::config(format!(
                    "task {:?} needs at least 2 classes",
                    t.id
                )));
            }
        }
        if self.baselines.is_empty() {
            return Err(Error::config("no baselines configured"));
        }
        for b in self.parse_baselines()? {
            if let Baseline::FedAvgSingle(Some(id)) = &b {
                if !self.tasks.iter().any(|t| t.id == *id) {
                    return Err(Error::config(format!(
                        "baseline {:?} references undefined task {:?}",
                        b.name(),
                        id
                    )));
                }
            }
        }
        for id in self.rounds.target_accuracy.keys() {
            if !self.tasks.iter().any(|t| t.id == *id) {
                return Err(Error::config(format!(
                    "target accuracy for undefined task {:?}",
                    id
                )));
            }
        }
        if let DatasetConfig::Csv { aux_sources, .. } = &self.dataset {
            for t in self.tasks.iter().filter(|t| t.role == TaskRole::Auxiliary) {
                if !aux_sources.contains_key(&t.id) {
                    return Err(Error::config(format!(
                        "auxiliary task {:?} has no source column under dataset.aux_sources",
                        t.id
                    )));
                }
            }
            for id in aux_sources.keys() {
                if !self
                    .tasks
                    .iter()
                    .any(|t| t.id == *id && t.role == TaskRole::Auxiliary)
                {
                    return Err(Error::config(format!(
                        "aux_sources names {:?}, which is not a declared auxiliary task",
                        id
                    )));
                }
            }
        }
        if self.rounds.rounds == 0 {
            return Err(Error::config("rounds must be at least 1"));
        }
        if !(self.rounds.eta >= 0.0 && self.rounds.eta.is_finite()) {
            return Err(Error::config("eta must be finite and non-negative"));
        }
        self.partition.to_mode()?;
        self.split_ratios().validate()?;
        Ok(())
    }

    pub fn parse_baselines(&self) -> Result<Vec<Baseline>> {
        self.baselines.iter().map(|s| Baseline::parse(s)).collect()
    }

    pub fn split_ratios(&self) -> SplitRatios {
        SplitRatios {
            train: self.split.train,
            validation: self.split.validation,
            test: self.split.test,
        }
    }

    pub fn main_task(&self) -> &TaskSpec {
        self.tasks
            .iter()
            .find(|t| t.role == TaskRole::Main)
            .expect("validated config has a main task")
    }

    pub fn aux_tasks(&self) -> Vec<&TaskSpec> {
        self.tasks
            .iter()
            .filter(|t| t.role == TaskRole::Auxiliary)
            .collect()
    }

    /// Loads or generates the dataset and attaches auxiliary labels.
    pub fn prepare_data(&self, seed: u64) -> Result<PreparedData> {
        let ratios = self.split_ratios();
        match &self.dataset {
            DatasetConfig::Synth {
                samples,
                feature_len,
                feature_noise,
                aux_label_noise,
            } => {
                let aux = self.aux_tasks();
                let spec = SynthSpec {
                    main_classes: self.main_task().num_classes,
                    aux_classes: aux.iter().map(|t| t.num_classes).collect(),
                    samples: *samples,
                    feature_len: *feature_len,
                    feature_noise: *feature_noise,
                    aux_label_noise: *aux_label_noise,
                };
                let aux_ids: Vec<String> = aux.iter().map(|t| t.id.clone()).collect();
                prepare_synth(&spec, &aux_ids, ratios, seed)
            }
            DatasetConfig::Csv {
                path,
                class_names,
                aux_sources,
            } => {
                let schema = CsvSchema {
                    class_names: class_names.clone(),
                };
                let loaded = load_flows_path(path, &schema)?;
                let main = self.main_task();
                if loaded.class_names.len() != main.num_classes {
                    return Err(Error::data(format!(
                        "file has {} classes but task {:?} declares {}",
                        loaded.class_names.len(),
                        main.id,
                        main.num_classes
                    )));
                }
                let derivations: Vec<AuxDerivation> = self
                    .aux_tasks()
                    .iter()
                    .map(|t| AuxDerivation {
                        task_id: t.id.clone(),
                        column: aux_sources[&t.id].into(),
                        n_bins: t.num_classes,
                    })
                    .collect();
                let (data, _) = prepare_csv(&loaded, &derivations, ratios, seed)?;
                Ok(data)
            }
        }
    }

    pub fn feature_len(&self) -> Result<usize> {
        match &self.dataset {
            DatasetConfig::Synth { feature_len, .. } => Ok(*feature_len),
            DatasetConfig::Csv { path, .. } => {
                // cheap header-only read to size the model
                let loaded = load_flows_path(path, &CsvSchema::default())?;
                Ok(loaded.feature_len)
            }
        }
    }

    /// Builds the trunk-plus-heads model for a task subset, inferring
    /// every layer's input size from the previous layer.
    pub fn build_model(&self, feature_len: usize, tasks: &[TaskSpec]) -> Result<HardSharedModel> {
        let channels = self.model.input_channels;
        if channels == 0 || !feature_len.is_multiple_of(channels) {
            return Err(Error::config(format!(
                "feature length {} is not divisible into {} channels",
                feature_len, channels
            )));
        }
        let input_shape = vec![channels, feature_len / channels];
        let trunk_specs = resolve_layers(&input_shape, &self.model.trunk)?;
        let trunk = LayerStack::new(input_shape, trunk_specs)?;

        let mut heads = Vec::with_capacity(tasks.len());
        for task in tasks {
            let head_input = trunk.output_shape().to_vec();
            let mut cfgs = self.model.head.clone();
            if head_input.len() > 1 {
                cfgs.insert(0, LayerConfig::Flatten);
            }
            cfgs.push(LayerConfig::Dense {
                out_features: task.num_classes,
            });
            let specs = resolve_layers(&head_input, &cfgs)?;
            heads.push((task.clone(), LayerStack::new(head_input, specs)?));
        }
        HardSharedModel::new(trunk, heads)
    }

    /// Assembles the run spec for one seed over prepared data.
    pub fn experiment_spec<'a>(
        &'a self,
        data: &'a PreparedData,
        seed: u64,
    ) -> Result<ExperimentSpec<'a>> {
        Ok(ExperimentSpec {
            tasks: &self.tasks,
            data,
            stations: self.stations,
            partition: self.partition.to_mode()?,
            round_cfg: RoundConfig {
                rounds: self.rounds.rounds,
                eta: self.rounds.eta,
                batch_size: self.rounds.batch_size,
                epochs: self.rounds.epochs,
                participation: self.rounds.participation,
                seed,
            },
            rlw_resample: self.weighting.rlw_resample,
            device: DeviceTemplate {
                cycles_per_bit: self.device.cycles_per_bit,
                cpu_freq_hz: self.device.cpu_freq_hz,
                capacitance_coeff: self.device.capacitance_coeff,
            },
            cost: CostConvention {
                bytes_per_param: self.cost.bytes_per_param,
                mb_definition: self.cost.mb_definition,
            },
        })
    }
}

/// Fills in each configured layer's input sizes by walking shapes from
/// `input_shape`.
fn resolve_layers(input_shape: &[usize], layers: &[LayerConfig]) -> Result<Vec<LayerSpec>> {
    let mut shape = input_shape.to_vec();
    let mut specs = Vec::with_capacity(layers.len());
    for (i, layer) in layers.iter().enumerate() {
        let spec = match *layer {
            LayerConfig::Conv1d {
                out_channels,
                kernel_size,
                stride,
            } => {
                if shape.len() != 2 {
                    return Err(Error::config(format!(
                        "layer {}: conv1d needs [channels, length] input, has {:?}",
                        i, shape
                    )));
                }
                LayerSpec::Conv1d {
                    in_channels: shape[0],
                    out_channels,
                    kernel_size,
                    stride,
                }
            }
            LayerConfig::Relu => LayerSpec::Relu,
            LayerConfig::MaxPool1d { pool_size } => LayerSpec::MaxPool1d { pool_size },
            LayerConfig::Flatten => LayerSpec::Flatten,
            LayerConfig::Dense { out_features } => {
                if shape.len() != 1 {
                    return Err(Error::config(format!(
                        "layer {}: dense needs a flat input; insert a flatten layer (shape is {:?})",
                        i, shape
                    )));
                }
                LayerSpec::Dense {
                    in_features: shape[0],
                    out_features,
                }
            }
        };
        shape = spec
            .output_shape(&shape)
            .map_err(|e| Error::config(format!("layer {}: {}", i, e)))?;
        specs.push(spec);
    }
    Ok(specs)
}
