//! Benchmark configuration: run parameters, per-chain baselines, latency
//! models, fee schedules and payload knobs. Loaded from JSON; unknown keys
//! are rejected so a typo cannot silently fall back to a default.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::did::OperationKind;
use crate::digest;
use crate::drivers::PayloadKnobs;
use crate::ledger::{FeeSchedule, LatencyModel, Platform, PlatformLatency};
use crate::mls::FlattenOptions;

pub const SCHEMA_VERSION: u32 = 1;

/// Calibration shipped with the tool; see `data/defaults.json`.
pub const DEFAULTS_JSON: &str = include_str!("../data/defaults.json");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    /// Mean block / ledger-close / consensus interval, the latency baseline.
    pub baseline_interval_s: f64,
    pub fees: FeeSchedule,
    pub latency: PlatformLatency,
    #[serde(default)]
    pub payload: PayloadKnobs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub schema_version: u32,
    /// Date the USD token prices refer to.
    pub priced_on: String,
    pub seed: u64,
    pub iterations: usize,
    /// Simulated start time of every ledger, Unix seconds.
    pub sim_epoch_unix_s: u64,
    pub platforms: Vec<Platform>,
    pub operations: Vec<OperationKind>,
    #[serde(default)]
    pub mls: FlattenOptions,
    pub chains: BTreeMap<Platform, ChainConfig>,
}

impl BenchConfig {
    pub fn defaults() -> Self {
        Self::from_json(DEFAULTS_JSON).expect("shipped defaults are valid")
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: BenchConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.iterations == 0 {
            return Err(ConfigError::invalid("iterations", "must be at least 1"));
        }
        let unique: BTreeSet<_> = self.platforms.iter().collect();
        if unique.len() != self.platforms.len() {
            return Err(ConfigError::invalid("platforms", "duplicate platform"));
        }
        let unique: BTreeSet<_> = self.operations.iter().collect();
        if unique.len() != self.operations.len() {
            return Err(ConfigError::invalid("operations", "duplicate operation"));
        }
        for platform in &self.platforms {
            let chain = self
                .chains
                .get(platform)
                .ok_or_else(|| ConfigError::invalid(format!("chains.{platform}"), "selected platform has no settings"))?;
            let base = format!("chains.{platform}");
            if !(chain.baseline_interval_s.is_finite() && chain.baseline_interval_s > 0.0) {
                return Err(ConfigError::invalid(format!("{base}.baseline_interval_s"), "must be positive"));
            }
            chain.fees.validate(*platform).map_err(|e| ConfigError::invalid(format!("{base}.fees"), e.to_string()))?;
            for op in OperationKind::ALL {
                let spec = chain.latency.operations.get(&op).ok_or_else(|| {
                    ConfigError::invalid(format!("{base}.latency.operations.{op}"), "missing latency model")
                })?;
                spec.validate()
                    .map_err(|e| ConfigError::invalid(format!("{base}.latency.operations.{op}"), e.to_string()))?;
            }
            if *platform == Platform::Hedera && chain.latency.topic_create.is_none() {
                return Err(ConfigError::invalid(format!("{base}.latency.topic_create"), "required for hedera"));
            }
            if let Some(spec) = &chain.latency.topic_create {
                spec.validate()
                    .map_err(|e| ConfigError::invalid(format!("{base}.latency.topic_create"), e.to_string()))?;
            }
            chain.payload.validate().map_err(|m| ConfigError::invalid(format!("{base}.payload"), m))?;
        }
        Ok(())
    }

    pub fn chain(&self, platform: Platform) -> &ChainConfig {
        &self.chains[&platform]
    }

    /// Fitted latency distributions for every selected platform.
    pub fn latency_model(&self) -> LatencyModel {
        let mut model = LatencyModel::empty();
        for platform in &self.platforms {
            model.add_platform(*platform, &self.chain(*platform).latency).expect("validated config");
        }
        model
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical config, which includes the seed.
    pub fn digest(&self) -> String {
        digest::hex(&digest::digest(&[self.canonical_json().as_bytes()]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_load_and_validate() {
        let config = BenchConfig::defaults();
        assert_eq!(config.iterations, 100);
        assert_eq!(config.platforms, Platform::ALL.to_vec());
        assert_eq!(config.chain(Platform::Ethereum).baseline_interval_s, 12.06);
        assert_eq!(config.chain(Platform::Xrpl).baseline_interval_s, 3.87);
        assert_eq!(config.chain(Platform::Hedera).baseline_interval_s, 2.90);
        assert_eq!(config.chain(Platform::Ethereum).fees.native_transfer_fee_usd, 0.04);
        assert_eq!(config.chain(Platform::Xrpl).fees.native_transfer_fee_usd, 0.000021);
        assert_eq!(config.chain(Platform::Hedera).fees.native_transfer_fee_usd, 0.0001);
        assert_eq!(config.priced_on, "2025-04-15");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut value: serde_json::Value = serde_json::from_str(DEFAULTS_JSON).unwrap();
        value["chains"]["xrpl"]["baseline_intreval_s"] = 3.0.into();
        let err = BenchConfig::from_json(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("baseline_intreval_s"), "{err}");
    }

    #[test]
    fn zero_iterations_names_field() {
        let mut config = BenchConfig::defaults();
        config.iterations = 0;
        match config.validate() {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "iterations"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_chain_for_selected_platform() {
        let mut config = BenchConfig::defaults();
        config.chains.remove(&Platform::Hedera);
        assert!(matches!(config.validate(), Err(ConfigError::Invalid { field, .. }) if field == "chains.hedera"));
    }

    #[test]
    fn digest_tracks_seed() {
        let a = BenchConfig::defaults();
        let mut b = a.clone();
        b.seed += 1;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest(), BenchConfig::defaults().digest());
    }
}
