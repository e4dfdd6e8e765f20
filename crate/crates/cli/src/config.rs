//! Experiment settings: a flat TOML file merged with command-line overrides.

use crate::CliError;
use serde::{Deserialize, Serialize};
use sparse_defense::svm::TrainConfig;
use std::path::{Path, PathBuf};

pub const DATA_DIR_ENV: &str = "MNIST_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d1: u8,
    pub d2: u8,
    /// Attack budget on the `[-1, 1]` pixel scale.
    pub epsilon: f64,
    /// Sparsity used by `table1`, `triptych` and `train`.
    pub rho: f64,
    /// Sparsities visited by `sweep`.
    pub rho_list: Vec<f64>,
    /// CDF 9/7 decomposition depth.
    pub levels: usize,
    /// Seeds the train/test split and the SGD sample order.
    pub seed: u64,
    pub lambda: f64,
    pub epochs: usize,
    pub burn_in_epochs: usize,
    pub step_offset: f64,
    pub data_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        Self {
            d1: 3,
            d2: 7,
            epsilon: 0.25,
            rho: 0.02,
            rho_list: vec![0.01, 0.02, 0.03, 0.05, 0.10, 0.20, 0.50],
            levels: 4,
            seed: 0,
            lambda: train.lambda,
            epochs: train.epochs,
            burn_in_epochs: train.burn_in_epochs,
            step_offset: train.step_offset,
            data_dir: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn pair(&self) -> (u8, u8) {
        (self.d1, self.d2)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lambda: self.lambda,
            epochs: self.epochs,
            step_offset: self.step_offset,
            burn_in_epochs: self.burn_in_epochs,
            seed: self.seed,
        }
    }

    /// `data_dir`, else `$MNIST_DIR`, else `data/mnist`.
    pub fn resolved_data_dir(&self) -> PathBuf {
        self.data_dir
            .clone()
            .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("data/mnist"))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.d1 == self.d2 || self.d1 > 9 || self.d2 > 9 {
            return bad(format!("invalid digit pair {},{}", self.d1, self.d2));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        let rho_ok = |r: f64| r > 0.0 && r <= 1.0;
        if !rho_ok(self.rho) {
            return bad(format!("rho must lie in (0, 1], got {}", self.rho));
        }
        if self.rho_list.is_empty() {
            return bad("rho_list is empty".into());
        }
        if let Some(r) = self.rho_list.iter().find(|r| !rho_ok(**r)) {
            return bad(format!("rho must lie in (0, 1], got {r}"));
        }
        if self.levels == 0 || self.levels > sparse_defense::basis::MAX_WAVELET_LEVELS {
            return bad(format!(
                "levels must be in 1..={}, got {}",
                sparse_defense::basis::MAX_WAVELET_LEVELS,
                self.levels
            ));
        }
        self.train_config()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// `key = value` lines, one per setting.
    pub fn render(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}

/// Monte-Carlo suite settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub seed: u64,
    pub semiwhite_n: usize,
    pub semiwhite_k: usize,
    pub semiwhite_trials: usize,
    pub semiwhite_delta: f64,
    /// Allowed `|mean − μ|` in standard errors.
    pub semiwhite_band: f64,
    pub moments_sizes: Vec<(usize, usize)>,
    pub moments_trials: usize,
    pub bound_instances: usize,
    pub clt_n: usize,
    pub clt_trials: usize,
    /// Dimension of the localized K sweep.
    pub white_n: usize,
    pub white_ks: Vec<usize>,
    pub white_trials: usize,
    /// Dimension of the (unarmed) random-basis K sweep.
    pub white_random_n: usize,
    pub white_random_trials: usize,
    pub scaling_ns: Vec<usize>,
    pub scaling_rho: f64,
    pub scaling_trials: usize,
    /// Weight distributions for the semi-white convergence and moment checks.
    pub distributions: Vec<String>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            semiwhite_n: 256,
            semiwhite_k: 64,
            semiwhite_trials: 10_000,
            semiwhite_delta: 0.2,
            semiwhite_band: 3.0,
            moments_sizes: vec![(256, 32), (512, 64)],
            moments_trials: 4000,
            bound_instances: 100_000,
            clt_n: 1024,
            clt_trials: 5000,
            white_n: 2048,
            white_ks: vec![8, 16, 32, 64],
            white_trials: 2000,
            white_random_n: 256,
            white_random_trials: 500,
            scaling_ns: vec![256, 512, 1024, 2048, 4096],
            scaling_rho: 1.0 / 32.0,
            scaling_trials: 1000,
            distributions: vec!["standard_normal".into(), "rademacher".into(), "uniform".into()],
        }
    }
}

impl EnsembleConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.semiwhite_k == 0 || self.semiwhite_k > self.semiwhite_n {
            return bad("semiwhite_k must be in 1..=semiwhite_n");
        }
        if self.moments_sizes.iter().any(|&(n, k)| k == 0 || k > n) {
            return bad("moments_sizes entries need 1 <= K <= N");
        }
        if self.white_ks.len() < 2 || self.white_ks.iter().any(|&k| k == 0 || k > self.white_n) {
            return bad("white_ks needs at least two values in 1..=white_n");
        }
        if !(self.scaling_rho > 0.0 && self.scaling_rho <= 1.0) {
            return bad("scaling_rho must lie in (0, 1]");
        }
        if !(self.semiwhite_delta > 0.0) || !(self.semiwhite_band > 0.0) {
            return bad("semiwhite_delta and semiwhite_band must be positive");
        }
        let trials = [
            self.semiwhite_trials,
            self.moments_trials,
            self.clt_trials,
            self.white_trials,
            self.white_random_trials,
            self.scaling_trials,
        ];
        if trials.iter().any(|&t| t < 2) {
            return bad("every trial count must be at least 2");
        }
        if self.distributions.is_empty() {
            return bad("distributions is empty");
        }
        for d in &self.distributions {
            crate::suite::parse_distribution(d, 0)?;
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}
