//! Run configuration: one JSON document driving simulations, sweeps, and the
//! staged exploration. Every key mirrors the domain-type field it configures;
//! all sections and fields are optional and default to the baseline machine
//! (L1=64 KiB, L2=128 KiB, phys_regs=80, rob=64, iq=20, lsq=12).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::camodel::{AccessType, DelayOverrides};
use crate::cpu::CoreConfig;
use crate::dse::{CacheParams, Grids, PlatformSpec};
use crate::kernels::{self, KernelKind, KernelSpec};

/// Environment variable overriding the default benchmark seed.
pub const SEED_ENV_VAR: &str = "UARCH_DSE_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid config: {0}")]
    Kernel(#[from] kernels::KernelError),
    #[error("invalid delay override table: {0}")]
    Overrides(#[from] crate::camodel::CamodelError),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheSection {
    pub l1_kb: u64,
    pub l2_kb: u64,
    pub l1_line_bytes: u64,
    pub l2_line_bytes: u64,
    pub l1_assoc: u32,
    pub l2_assoc: u32,
    /// Hit latencies used when the delay model is off.
    pub l1_hit_cycles: u32,
    pub l2_hit_cycles: u32,
    pub mem_cycles: u32,
    pub clock_ghz: f64,
    pub use_delay_model: bool,
    pub delay_override_path: Option<PathBuf>,
    /// Accepted for configuration fidelity; no timing effect.
    pub temperature_k: Option<u32>,
    /// Degenerate-mode fixed latency for the oracle gate.
    pub perfect_cache_cycles: Option<u32>,
}

impl Default for CacheSection {
    fn default() -> Self {
        Self {
            l1_kb: 64,
            l2_kb: 128,
            l1_line_bytes: 32,
            l2_line_bytes: 64,
            l1_assoc: 4,
            l2_assoc: 8,
            l1_hit_cycles: 1,
            l2_hit_cycles: 6,
            mem_cycles: 100,
            clock_ghz: 1.0,
            use_delay_model: true,
            delay_override_path: None,
            temperature_k: None,
            perfect_cache_cycles: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkEntry {
    pub kernel: KernelKind,
    #[serde(default)]
    pub params: BTreeMap<String, u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub core: CoreConfig,
    pub cache: CacheSection,
    pub sweep: Grids,
    pub benchmarks: Vec<BenchmarkEntry>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            core: CoreConfig::default(),
            cache: CacheSection::default(),
            sweep: Grids::default(),
            benchmarks: KernelKind::all()
                .into_iter()
                .map(|kernel| BenchmarkEntry { kernel, params: BTreeMap::new(), seed: None, label: None })
                .collect(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut core = self.core;
        core.clock_ghz = self.cache.clock_ghz;
        core.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.sweep.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.benchmarks.is_empty() {
            return Err(ConfigError::Invalid("benchmark list is empty".into()));
        }
        for spec in self.benchmark_specs() {
            kernels::check_spec(&spec.1)?;
        }
        if let Some(p) = &self.cache.delay_override_path {
            if !p.exists() {
                return Err(ConfigError::Invalid(format!("delay override file {} does not exist", p.display())));
            }
        }
        if !self.cache.clock_ghz.is_finite() || self.cache.clock_ghz <= 0.0 {
            return Err(ConfigError::Invalid("cache.clock_ghz must be positive".into()));
        }
        Ok(())
    }

    /// Core configuration with the clock taken from the cache section.
    pub fn core_config(&self) -> CoreConfig {
        let mut core = self.core;
        core.clock_ghz = self.cache.clock_ghz;
        core
    }

    /// Build the platform spec, loading the delay-override table if present.
    pub fn platform(&self) -> Result<PlatformSpec, ConfigError> {
        let overrides = match &self.cache.delay_override_path {
            Some(path) => {
                let text =
                    fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
                Some(DelayOverrides::parse_csv(&text)?)
            }
            None => None,
        };
        Ok(PlatformSpec {
            l1: CacheParams {
                capacity_kb: self.cache.l1_kb,
                line_bytes: self.cache.l1_line_bytes,
                associativity: self.cache.l1_assoc,
                access_type: AccessType::Fast,
                fixed_hit_cycles: self.cache.l1_hit_cycles,
            },
            l2: CacheParams {
                capacity_kb: self.cache.l2_kb,
                line_bytes: self.cache.l2_line_bytes,
                associativity: self.cache.l2_assoc,
                access_type: AccessType::NormalSerial,
                fixed_hit_cycles: self.cache.l2_hit_cycles,
            },
            mem_cycles: self.cache.mem_cycles,
            clock_ghz: self.cache.clock_ghz,
            use_delay_model: self.cache.use_delay_model,
            overrides,
            perfect_cycles: self.cache.perfect_cache_cycles,
        })
    }

    /// Labelled kernel specs. The `UARCH_DSE_SEED` environment variable
    /// overrides the built-in default seed for entries without an explicit
    /// one; duplicate labels get a positional suffix.
    pub fn benchmark_specs(&self) -> Vec<(String, KernelSpec)> {
        let env_seed = std::env::var(SEED_ENV_VAR).ok().and_then(|v| v.parse::<u64>().ok());
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        self.benchmarks
            .iter()
            .map(|b| {
                let seed = b.seed.or(env_seed).unwrap_or(1);
                let mut spec = KernelSpec::new(b.kernel, seed);
                spec.params = b.params.clone();
                let base = b.label.clone().unwrap_or_else(|| b.kernel.name().to_string());
                let n = seen.entry(base.clone()).or_insert(0);
                let label = if *n == 0 { base } else { format!("{base}@{n}") };
                *n += 1;
                (label, spec)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_matches_baseline() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.cache.l1_kb, 64);
        assert_eq!(cfg.cache.l2_kb, 128);
        assert_eq!(cfg.core.phys_regs, 80);
        assert_eq!(cfg.core.rob_size, 64);
        assert_eq!(cfg.core.iq_size, 20);
        assert_eq!(cfg.core.lsq_size, 12);
        assert_eq!(cfg.benchmarks.len(), 6);
    }

    #[test]
    fn minimal_json_parses_with_defaults() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.core_config().clock_ghz, 1.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"cache": {"l1_size": 64}}"#).is_err());
    }

    #[test]
    fn zero_rob_rejected() {
        let cfg: RunConfig = serde_json::from_str(r#"{"core": {"rob_size": 0}}"#).unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn bad_benchmark_params_rejected() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"benchmarks": [{"kernel": "dijkstra", "params": {"n_nodes": 1}}]}"#).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn duplicate_labels_get_suffixes() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"benchmarks": [{"kernel": "dijkstra"}, {"kernel": "dijkstra", "params": {"n_nodes": 16}}]}"#,
        )
        .unwrap();
        let specs = cfg.benchmark_specs();
        assert_eq!(specs[0].0, "dijkstra");
        assert_eq!(specs[1].0, "dijkstra@1");
    }

    #[test]
    fn clock_comes_from_cache_section() {
        let cfg: RunConfig = serde_json::from_str(r#"{"cache": {"clock_ghz": 2.0}}"#).unwrap();
        assert_eq!(cfg.core_config().clock_ghz, 2.0);
    }
}
