use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::daud_net::{Activation, NetworkShape, TrainConfig};
use crate::error::{Error, Result};
use crate::signal_model::AudScenario;

/// Detectors a sweep can score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// First ensemble member alone.
    Daud,
    DaudEnsemble,
    LsBomp,
    MmseBomp,
    Oracle,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Daud => "daud",
            Algorithm::DaudEnsemble => "daud_ensemble",
            Algorithm::LsBomp => "ls_bomp",
            Algorithm::MmseBomp => "mmse_bomp",
            Algorithm::Oracle => "oracle",
        }
    }

    pub fn is_learned(self) -> bool {
        matches!(self, Algorithm::Daud | Algorithm::DaudEnsemble)
    }
}

/// Parameter varied along a sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    #[default]
    Snr,
    Devices,
    Subcarriers,
    Sparsity,
    Antennas,
    Measurements,
    Width,
    Depth,
    Dropout,
    LearningRate,
    BatchSize,
    TrainingSamples,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::Snr => "snr_db",
            SweepAxis::Devices => "devices",
            SweepAxis::Subcarriers => "subcarriers",
            SweepAxis::Sparsity => "sparsity",
            SweepAxis::Antennas => "antennas",
            SweepAxis::Measurements => "measurements",
            SweepAxis::Width => "width",
            SweepAxis::Depth => "depth",
            SweepAxis::Dropout => "dropout",
            SweepAxis::LearningRate => "learning_rate",
            SweepAxis::BatchSize => "batch_size",
            SweepAxis::TrainingSamples => "training_samples",
        }
    }

    fn is_integral(self) -> bool {
        !matches!(self, SweepAxis::Snr | SweepAxis::Dropout | SweepAxis::LearningRate)
    }

    /// Axes that change the codebook dimensions get a fresh codebook per point.
    pub fn regenerates_codebook(self) -> bool {
        matches!(self, SweepAxis::Devices | SweepAxis::Subcarriers)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSettings {
    pub width: usize,
    pub depth: usize,
    pub activation: Activation,
}

impl Default for NetworkSettings {
    fn default() -> Self {
        NetworkSettings {
            width: 128,
            depth: 3,
            activation: Activation::Relu,
        }
    }
}

impl NetworkSettings {
    pub fn shape(&self, scenario: &AudScenario) -> Result<NetworkShape> {
        Ok(NetworkShape::new(scenario.input_dim(), self.width, self.depth, scenario.devices)?
            .with_activation(self.activation))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSettings {
    /// Training records per ensemble member.
    pub samples: usize,
    /// Records used to calibrate sparsity thresholds.
    pub calibration_samples: usize,
}

impl Default for DataSettings {
    fn default() -> Self {
        DataSettings {
            samples: 100_000,
            calibration_samples: 5_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSettings {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    /// Test SNR for axes other than SNR itself.
    pub snr_db: f64,
    /// Pretrained ensemble members. When empty, learned detectors are trained
    /// for each grid point (and reused while the training setup is unchanged).
    pub checkpoints: Vec<PathBuf>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            axis: SweepAxis::Snr,
            values: vec![5.0, 10.0, 15.0, 20.0, 25.0],
            algorithms: vec![Algorithm::DaudEnsemble, Algorithm::LsBomp, Algorithm::MmseBomp],
            trials: 1000,
            snr_db: 20.0,
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BankSettings {
    pub max_sparsity: usize,
    /// Lower quantile of the calibration ratios used as τ (0 = minimum).
    pub quantile: f64,
    /// One τ for every level instead of the per-level values.
    pub global_tau: Option<f64>,
    /// Manifest to load for `estimate`; defaults to `<out>/bank.toml`.
    pub manifest: Option<PathBuf>,
}

impl Default for BankSettings {
    fn default() -> Self {
        BankSettings {
            max_sparsity: 4,
            quantile: 0.0,
            global_tau: None,
            manifest: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateSettings {
    /// True sparsity levels drawn for the test instances.
    pub sparsity: Vec<usize>,
    pub trials: usize,
    pub snr_db: f64,
}

impl Default for EstimateSettings {
    fn default() -> Self {
        EstimateSettings {
            sparsity: vec![1, 2, 3, 4],
            trials: 500,
            snr_db: 25.0,
        }
    }
}

/// Everything one experiment needs. Every section is optional and falls back
/// to the desk-scale defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub scenario: AudScenario,
    pub network: NetworkSettings,
    pub train: TrainConfig,
    pub data: DataSettings,
    pub sweep: SweepSettings,
    pub bank: BankSettings,
    pub estimate: EstimateSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            out_dir: PathBuf::from("out"),
            scenario: AudScenario::desk(),
            network: NetworkSettings::default(),
            train: TrainConfig::default(),
            data: DataSettings::default(),
            sweep: SweepSettings::default(),
            bank: BankSettings::default(),
            estimate: EstimateSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.train.validate()?;
        self.network.shape(&self.scenario)?;
        let sweep = &self.sweep;
        if sweep.values.is_empty() {
            return Err(Error::InvalidConfig("sweep grid is empty".into()));
        }
        if sweep.trials == 0 {
            return Err(Error::InvalidConfig("sweep trial count must be at least 1".into()));
        }
        if sweep.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms selected".into()));
        }
        if sweep.axis.is_integral() {
            if let Some(v) = sweep.values.iter().find(|v| v.fract() != 0.0 || **v < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "axis {} needs positive integer values, got {v}",
                    sweep.axis.label()
                )));
            }
        }
        if self.bank.max_sparsity == 0 || self.bank.max_sparsity >= self.scenario.devices {
            return Err(Error::InvalidConfig("bank max_sparsity must lie in 1..N".into()));
        }
        if !(0.0..=1.0).contains(&self.bank.quantile) {
            return Err(Error::InvalidConfig("bank quantile must lie in [0, 1]".into()));
        }
        if let Some(t) = self.bank.global_tau {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidConfig("global_tau must lie in (0, 1]".into()));
            }
        }
        if self.estimate.sparsity.iter().any(|&k| k == 0 || k > self.bank.max_sparsity) {
            return Err(Error::InvalidConfig("estimate sparsity levels must lie in 1..=max_sparsity".into()));
        }
        if self.data.samples < self.train.folds * self.train.batch_size {
            return Err(Error::InvalidConfig(format!(
                "{} training samples cannot fill {} folds of batch size {}",
                self.data.samples, self.train.folds, self.train.batch_size
            )));
        }
        Ok(())
    }

    /// Applies one sweep value to a copy of this config.
    pub fn at_point(&self, value: f64) -> Result<ExperimentConfig> {
        let mut c = self.clone();
        let n = value as usize;
        match self.sweep.axis {
            SweepAxis::Snr => {}
            SweepAxis::Devices => c.scenario.devices = n,
            SweepAxis::Subcarriers => c.scenario.subcarriers = n,
            SweepAxis::Sparsity => c.scenario.active = n,
            SweepAxis::Antennas => c.scenario.antennas = n,
            SweepAxis::Measurements => c.scenario.measurements = n,
            SweepAxis::Width => c.network.width = n,
            SweepAxis::Depth => c.network.depth = n,
            SweepAxis::Dropout => c.train.dropout = value,
            SweepAxis::LearningRate => c.train.learning_rate = value,
            SweepAxis::BatchSize => c.train.batch_size = n,
            SweepAxis::TrainingSamples => c.data.samples = n,
        }
        c.scenario.validate()?;
        c.train.validate()?;
        c.network.shape(&c.scenario)?;
        Ok(c)
    }

    /// SNR of the test instances at a grid point.
    pub fn test_snr_db(&self, value: f64) -> f64 {
        if self.sweep.axis == SweepAxis::Snr {
            value
        } else {
            self.sweep.snr_db
        }
    }
}
