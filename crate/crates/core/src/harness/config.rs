//! Experiment configuration, loaded from TOML.
//!
//! ```toml
//! seed = 1
//! output_dir = "runs/fig4"
//! fast_speed_factor = 2.0
//!
//! [network]          # NetworkConfig fields
//! eta_ventral = 1e-3
//!
//! [train]            # max_epochs, target_cost, shuffle
//! max_epochs = 20000
//!
//! [data]             # DatasetSpec fields
//! noise_sigma = 0.005
//!
//! [recognition]
//! window_len = 20    # omitted: whole sequence
//! epochs = 3000
//! gamma = 0.1        # omitted: network.gamma_recognition
//!
//! [prediction]
//! steps = 19
//! ```
//!
//! Every table and key is optional; unknown keys are rejected. The top-level
//! `seed` overrides the seeds inside `[train]` and `[data]`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::TrainConfig;
use crate::net::NetworkConfig;
use crate::trajectories::DatasetSpec;

/// Values per encoded frame.
const FRAME_WIDTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecognitionConfig {
    /// Suffix length scored during recognition; `None` uses the whole sequence.
    pub window_len: Option<usize>,
    pub epochs: usize,
    /// Overrides `network.gamma_recognition` when set.
    pub gamma: Option<f64>,
}

impl Default for RecognitionConfig {
    fn default() -> Self {
        Self {
            window_len: None,
            epochs: 3000,
            gamma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictionConfig {
    pub steps: usize,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        Self { steps: 19 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub data: DatasetSpec,
    pub recognition: RecognitionConfig,
    pub prediction: PredictionConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Speed factor used for the retraining run of `fig8`.
    pub fast_speed_factor: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            network: experiment_network(),
            train: TrainConfig::default(),
            data: DatasetSpec::default(),
            recognition: RecognitionConfig::default(),
            prediction: PredictionConfig::default(),
            output_dir: PathBuf::from("runs"),
            seed: 1,
            fast_speed_factor: 2.0,
        }
    }
}

/// Network settings used by the experiment pipelines.
///
/// Same architecture as [`NetworkConfig::default`], with a faster ventral
/// learning rate and PB gain so that 20,000 epochs reach the target fit.
pub fn experiment_network() -> NetworkConfig {
    NetworkConfig {
        eta_ventral: 1.0e-3,
        m_gamma: 10.0,
        ..NetworkConfig::default()
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.sync_seeds();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Copies the top-level seed into the training and data sections.
    pub fn sync_seeds(&mut self) {
        self.train.seed = self.seed;
        self.data.seed = self.seed;
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.sync_seeds();
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.train.validate()?;
        self.data.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.network.n_input != FRAME_WIDTH || self.network.n_output != FRAME_WIDTH {
            return Err(Error::Config(format!(
                "network must have 4 inputs and 4 outputs to match the frame encoding, got {}/{}",
                self.network.n_input, self.network.n_output
            )));
        }
        if self.recognition.epochs == 0 {
            return Err(Error::Config("recognition.epochs must be at least 1".into()));
        }
        match self.recognition.window_len {
            Some(0) => return Err(Error::Config("recognition.window_len must be at least 1".into())),
            Some(w) if w > self.data.points_per_loop => {
                return Err(Error::Config(format!(
                    "recognition.window_len {w} exceeds the sequence length {}",
                    self.data.points_per_loop
                )))
            }
            _ => {}
        }
        if let Some(g) = self.recognition.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config("recognition.gamma must be positive".into()));
            }
        }
        if self.prediction.steps == 0 {
            return Err(Error::Config("prediction.steps must be at least 1".into()));
        }
        if !(self.fast_speed_factor > 0.0 && self.fast_speed_factor.is_finite()) {
            return Err(Error::Config("fast_speed_factor must be positive".into()));
        }
        Ok(())
    }

    /// Network config with the recognition rate override applied.
    pub fn network_for_recognition(&self) -> NetworkConfig {
        NetworkConfig {
            gamma_recognition: self.recognition.gamma.unwrap_or(self.network.gamma_recognition),
            ..self.network.clone()
        }
    }

    pub fn window_len(&self, seq_len: usize) -> usize {
        self.recognition.window_len.unwrap_or(seq_len).min(seq_len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default().with_seed(1));
    }

    #[test]
    fn partial_tables_merge_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            "seed = 9\n[network]\nn_d = 7\n[train]\nmax_epochs = 12\n[recognition]\nwindow_len = 5\n",
        )
        .unwrap();
        assert_eq!(cfg.network.n_d, 7);
        assert_eq!(cfg.network.n_v, 50);
        assert_eq!(cfg.train.max_epochs, 12);
        assert_eq!((cfg.train.seed, cfg.data.seed), (9, 9));
        assert_eq!(cfg.window_len(20), 5);
        assert_eq!(cfg.recognition.epochs, 3000);
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in ["bogus = 1", "[network]\nn_hidden = 3", "[recognition]\nwindow = 3", "[extra]\n"] {
            assert!(
                matches!(ExperimentConfig::from_toml_str(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            "[network]\nn_input = 3",
            "[recognition]\nwindow_len = 21",
            "[recognition]\nepochs = 0",
            "[prediction]\nsteps = 0",
            "[data]\nrepeats = 0",
            "[train]\nmax_epochs = 0",
            "fast_speed_factor = -1.0",
        ] {
            assert!(
                matches!(ExperimentConfig::from_toml_str(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = ExperimentConfig::default().with_seed(4);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn missing_file_is_config_error() {
        assert!(matches!(
            ExperimentConfig::load(Path::new("/nonexistent/x.toml")),
            Err(Error::Config(_))
        ));
    }
}
