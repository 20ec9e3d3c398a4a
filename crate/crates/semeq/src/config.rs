//! Scenario configuration: one JSON document that pins down the worlds, the
//! equalizer recipe, the radio and compute models and the controller knobs,
//! so a simulation is reproducible from the file plus nothing else.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::equalize::EqualizerMethod;
use crate::error::{Error, Result};
use crate::lyapunov::{QueueParams, QueueTargets};
use crate::phy::{DeviceComputeConfig, RadioConfig, ServerComputeConfig};
use crate::seeds::{derive_seed, Component};
use crate::world::{
    generate_world, ingest_embeddings, AnchorStrategy, LatentWorld, TablePlan, WorldSpec,
};

/// Where one user's paired embeddings come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WorldSource {
    /// Generated on the fly. The embedded seed is ignored; worlds draw their
    /// seeds from the scenario seed and the user index so one scenario seed
    /// reproduces the whole experiment.
    Synthetic(WorldSpec),
    /// Loaded from paired EMB1 files plus a label CSV.
    External { tx: String, rx: String, labels: String },
}

/// Full description of one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Master seed; every random stream in the run derives from it.
    pub seed: u64,
    /// Slots to simulate.
    pub slots: usize,
    /// Long-run slot latency target (seconds).
    pub latency_target_s: f64,
    /// Long-run accuracy floor per user.
    pub accuracy_targets: Vec<f64>,
    /// Power weight `V`: larger favors power saving over queue slack.
    pub penalty_weight: f64,
    /// Latency queue step size.
    pub latency_step: f64,
    /// Accuracy queue step size.
    pub accuracy_step: f64,
    /// Bandwidth demand weight exponent on the coefficient count.
    pub bandwidth_alpha: f64,
    /// Bandwidth demand weight exponent on the bit depth.
    pub bandwidth_beta: f64,
    /// Coefficient menu, ascending.
    pub coeff_set: Vec<usize>,
    /// Bit-depth menu, ascending.
    pub quant_set: Vec<u32>,
    /// Equalizer construction recipe.
    pub method: EqualizerMethod,
    pub anchor_strategy: AnchorStrategy,
    /// Support samples per anchor (prototypical strategy).
    pub samples_per_cluster: usize,
    pub radio: RadioConfig,
    /// One compute model per user device.
    pub devices: Vec<DeviceComputeConfig>,
    pub server: ServerComputeConfig,
    /// One paired-embedding source per user.
    pub worlds: Vec<WorldSource>,
}

impl ScenarioConfig {
    pub fn n_users(&self) -> usize {
        self.devices.len()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Format {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let config: ScenarioConfig = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot serialize scenario: {e}")))?;
        fs::write(path.as_ref(), text + "\n")?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.devices.len();
        if k == 0 {
            return Err(Error::Config("scenario needs at least one user".into()));
        }
        if self.worlds.len() != k || self.accuracy_targets.len() != k {
            return Err(Error::Config(format!(
                "users disagree: {} devices, {} worlds, {} accuracy targets",
                k,
                self.worlds.len(),
                self.accuracy_targets.len()
            )));
        }
        if self.slots == 0 {
            return Err(Error::Config("slot count must be positive".into()));
        }
        if !(self.penalty_weight > 0.0) {
            return Err(Error::Config("penalty weight must be positive".into()));
        }
        if !(self.bandwidth_alpha >= 0.0) || !(self.bandwidth_beta >= 0.0) {
            return Err(Error::Config("bandwidth exponents must be non-negative".into()));
        }
        if self.samples_per_cluster == 0 {
            return Err(Error::Config("samples_per_cluster must be positive".into()));
        }
        if self.coeff_set.is_empty() || !self.coeff_set.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("coeff_set must be non-empty and ascending".into()));
        }
        if self.quant_set.is_empty() || !self.quant_set.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("quant_set must be non-empty and ascending".into()));
        }
        if self.quant_set[0] < 1 || *self.quant_set.last().unwrap() > 32 {
            return Err(Error::Config("bit depths must lie in [1, 32]".into()));
        }
        self.queue_targets().validate()?;
        self.queue_params().validate()?;
        self.radio.validate(k)?;
        for d in &self.devices {
            d.validate()?;
        }
        self.server.validate()?;
        Ok(())
    }

    pub fn queue_targets(&self) -> QueueTargets {
        QueueTargets { latency_s: self.latency_target_s, accuracy: self.accuracy_targets.clone() }
    }

    pub fn queue_params(&self) -> QueueParams {
        QueueParams { latency_step: self.latency_step, accuracy_step: self.accuracy_step }
    }

    pub fn table_plan(&self) -> TablePlan {
        TablePlan {
            method: self.method,
            strategy: self.anchor_strategy,
            samples_per_cluster: self.samples_per_cluster,
            seed: self.seed,
        }
    }

    /// Materializes every user's world. Synthetic sources get per-user seeds
    /// derived from the scenario seed; external sources load from disk.
    pub fn build_worlds(&self) -> Result<Vec<LatentWorld>> {
        self.worlds
            .iter()
            .enumerate()
            .map(|(user, source)| match source {
                WorldSource::Synthetic(spec) => {
                    let mut spec = spec.clone();
                    spec.seed = derive_seed(self.seed, Component::World, user as u64);
                    generate_world(&spec)
                }
                WorldSource::External { tx, rx, labels } => ingest_embeddings(tx, rx, labels),
            })
            .collect()
    }

    /// The stock three-user scenario used by the examples and as the CLI
    /// default: synthetic 64-dimensional worlds with 32 classes, a 500 kHz
    /// uplink at 3.5 GHz, and budgets tight enough that the latency target
    /// binds without being unreachable.
    pub fn default_three_users() -> Self {
        let world = |spread: f64, noise: f64| {
            WorldSource::Synthetic(WorldSpec {
                dim_tx: 64,
                dim_rx: 64,
                n_classes: 32,
                n_samples: 4000,
                cluster_spread: spread,
                noise_sigma: noise,
                scale: 1.0,
                seed: 0,
            })
        };
        ScenarioConfig {
            seed: 7,
            slots: 7500,
            latency_target_s: 0.04,
            accuracy_targets: vec![0.60, 0.60, 0.60],
            penalty_weight: 1e-2,
            latency_step: 1.0,
            accuracy_step: 1.0,
            bandwidth_alpha: 1.0,
            bandwidth_beta: 1.0,
            coeff_set: vec![8, 12, 16, 24, 32, 48, 64],
            quant_set: vec![4, 6, 8, 12, 16, 32],
            method: EqualizerMethod::Pfe,
            anchor_strategy: AnchorStrategy::Prototypical,
            samples_per_cluster: 8,
            radio: RadioConfig {
                bandwidth_hz: 5e5,
                temperature_k: 290.0,
                carrier_ghz: 3.5,
                distance_km: 0.1,
                max_tx_power_w: 0.15,
                rate_min_bps: 1e4,
                min_bandwidth_hz: None,
            },
            devices: vec![
                DeviceComputeConfig {
                    kappa: 1e-27,
                    freq_min_hz: 1e8,
                    freq_max_hz: 3.5e9,
                    cycles_base: 4.0e6,
                    cycles_per_coeff: 2.0e4,
                },
                DeviceComputeConfig {
                    kappa: 1e-27,
                    freq_min_hz: 1.2e8,
                    freq_max_hz: 3.0e9,
                    cycles_base: 4.5e6,
                    cycles_per_coeff: 2.5e4,
                },
                DeviceComputeConfig {
                    kappa: 1e-27,
                    freq_min_hz: 1e8,
                    freq_max_hz: 2.5e9,
                    cycles_base: 5.0e6,
                    cycles_per_coeff: 3.0e4,
                },
            ],
            server: ServerComputeConfig {
                kappa: 1e-27,
                freq_min_hz: 2e8,
                freq_max_hz: 4e9,
                recon_base: 5e5,
                recon_per_coeff: 2e4,
                predict_cycles: 2e6,
            },
            worlds: vec![world(0.25, 0.05), world(0.28, 0.05), world(0.25, 0.08)],
        }
    }
}
