//! TOML run and benchmark configurations.

use std::collections::BTreeMap;
use std::path::Path;

use dyncolor::engine::{auto_epsilon, prefers_baseline, EngineConfig};
use dyncolor::params::ParamSet;
use dyncolor::{EngineMode, Profile};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{StrategyKind, StrategyParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Toml { path: String, source: toml::de::Error },
    #[error("{0}")]
    Invalid(String),
}

/// Which algorithm a run uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeChoice {
    /// Baseline when Δ ≤ n^{8/9}, engine otherwise.
    #[default]
    Auto,
    Engine,
    Baseline,
}

impl std::str::FromStr for ModeChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(ModeChoice::Auto),
            "engine" => Ok(ModeChoice::Engine),
            "baseline" => Ok(ModeChoice::Baseline),
            other => Err(format!("unknown mode `{other}` (expected auto, engine or baseline)")),
        }
    }
}

/// Builds an engine configuration; `epsilon`/`tau` default to the auto-tuned
/// values and `overrides` are applied last through `ParamSet::set_key`.
#[allow(clippy::too_many_arguments)]
pub fn engine_config(
    n: usize,
    delta: usize,
    profile: Profile,
    mode: ModeChoice,
    seed: u64,
    epsilon: Option<f64>,
    tau: Option<f64>,
    overrides: &BTreeMap<String, String>,
) -> Result<EngineConfig, ConfigError> {
    let eps = epsilon.unwrap_or_else(|| auto_epsilon(n, delta));
    let mut params = ParamSet::for_profile(profile, n, delta, eps, seed);
    if let Some(t) = tau {
        params.tau = t;
        params.rederive(n, delta);
    }
    for (k, v) in overrides {
        params.set_key(k, v).map_err(ConfigError::Invalid)?;
    }
    params.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let mode = match mode {
        ModeChoice::Auto if prefers_baseline(n, delta) => EngineMode::Baseline,
        ModeChoice::Auto | ModeChoice::Engine => EngineMode::Engine,
        ModeChoice::Baseline => EngineMode::Baseline,
    };
    Ok(EngineConfig { params, mode })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    /// Defaults to n/2.
    pub delta: Option<usize>,
    pub epsilon: Option<f64>,
    pub tau: Option<f64>,
    pub profile: Profile,
    pub mode: ModeChoice,
    pub seed: u64,
    pub strategy: StrategyKind,
    pub steps: u64,
    /// Run the full verifier every this many updates (0 = only at the end).
    pub verify_every: u64,
    pub strategy_params: StrategyParams,
    /// Raw parameter overrides, e.g. `sample_count_k = "64"`.
    pub overrides: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 512,
            delta: None,
            epsilon: None,
            tau: None,
            profile: Profile::Desk,
            mode: ModeChoice::Auto,
            seed: 1,
            strategy: StrategyKind::AdaptiveMonochrome,
            steps: 10_000,
            verify_every: 0,
            strategy_params: StrategyParams::default(),
            overrides: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn delta(&self) -> usize {
        self.delta.unwrap_or(self.n / 2).max(1)
    }

    pub fn engine_config(&self) -> Result<EngineConfig, ConfigError> {
        engine_config(self.n, self.delta(), self.profile, self.mode, self.seed, self.epsilon, self.tau, &self.overrides)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        load_toml(path)
    }
}

/// A benchmark grid: every combination of n, strategy, mode and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub ns: Vec<usize>,
    /// Δ = max(1, round(delta_frac·n)).
    pub delta_frac: f64,
    pub strategies: Vec<StrategyKind>,
    pub modes: Vec<ModeChoice>,
    pub seeds: Vec<u64>,
    pub steps: u64,
    pub profile: Profile,
    pub strategy_params: StrategyParams,
    pub overrides: BTreeMap<String, String>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            ns: vec![256, 512, 1024, 2048],
            delta_frac: 0.5,
            strategies: vec![StrategyKind::AdaptiveMonochrome],
            modes: vec![ModeChoice::Engine, ModeChoice::Baseline],
            seeds: vec![1],
            steps: 10_000,
            profile: Profile::Desk,
            strategy_params: StrategyParams::default(),
            overrides: BTreeMap::new(),
        }
    }
}

impl BenchConfig {
    pub fn delta_for(&self, n: usize) -> usize {
        ((self.delta_frac * n as f64).round() as usize).max(1)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        load_toml(path)
    }
}

fn load_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let p = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: p.clone(), source })?;
    toml::from_str(&text).map_err(|source| ConfigError::Toml { path: p, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_from_toml() {
        let cfg: RunConfig = toml::from_str(
            r#"
            n = 1024
            strategy = "clique-churn"
            mode = "engine"
            steps = 50
            [overrides]
            sample_count_k = "48"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.delta(), 512);
        assert_eq!(cfg.strategy, StrategyKind::CliqueChurn);
        let ec = cfg.engine_config().unwrap();
        assert_eq!(ec.mode, EngineMode::Engine);
        assert_eq!(ec.params.sample_count_k, 48);
    }

    #[test]
    fn auto_mode_follows_the_regime() {
        let none = BTreeMap::new();
        let small = engine_config(256, 128, Profile::Desk, ModeChoice::Auto, 0, None, None, &none).unwrap();
        assert_eq!(small.mode, EngineMode::Baseline);
        let big = engine_config(2048, 1024, Profile::Desk, ModeChoice::Auto, 0, None, None, &none).unwrap();
        assert_eq!(big.mode, EngineMode::Engine);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("n = 10\nbogus = 1").is_err());
        let mut o = BTreeMap::new();
        o.insert("nope".to_string(), "1".to_string());
        assert!(engine_config(64, 32, Profile::Desk, ModeChoice::Engine, 0, None, None, &o).is_err());
    }
}
