//! Experiment configuration, read from TOML.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use bdirs_core::{
    dbm_to_watts, JointConfig64, OptimizerConfig, PhaseDesignerConfig, QuantSpec64, Scenario, SolverConfig, Variant,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub p_dbm_values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_values: vec![64, 128, 256, 512],
            p_dbm_values: vec![10.0, 20.0, 30.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeConfig {
    pub p_dbm: f64,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self { p_dbm: 10.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub l_bits: u32,
    pub seeds: Vec<u64>,
    pub variants: Vec<Variant>,
    pub scenario: Scenario,
    pub sweep: SweepConfig,
    pub converge: ConvergeConfig,
    pub precoder: SolverConfig,
    pub phase_designer: PhaseDesignerConfig,
    pub optimizer: OptimizerConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            l_bits: 1,
            seeds: (0..10).collect(),
            variants: Variant::ALL.to_vec(),
            scenario: Scenario::default(),
            sweep: SweepConfig::default(),
            converge: ConvergeConfig::default(),
            precoder: SolverConfig::default(),
            phase_designer: PhaseDesignerConfig::default(),
            optimizer: OptimizerConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SimError::Config(msg));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return bad("seeds must be unique".into());
        }
        if self.variants.is_empty() {
            return bad("variants must not be empty".into());
        }
        if self.variants.iter().collect::<BTreeSet<_>>().len() != self.variants.len() {
            return bad("variants must be unique".into());
        }
        if self.sweep.n_values.is_empty() || self.sweep.p_dbm_values.is_empty() {
            return bad("sweep.n_values and sweep.p_dbm_values must not be empty".into());
        }
        if self.sweep.n_values.contains(&0) {
            return bad("sweep.n_values must be positive".into());
        }
        if self.sweep.n_values.iter().collect::<BTreeSet<_>>().len() != self.sweep.n_values.len() {
            return bad("sweep.n_values must be unique".into());
        }
        let powers = self.sweep.p_dbm_values.iter().chain([&self.converge.p_dbm]);
        if powers.clone().any(|p| !p.is_finite()) {
            return bad("transmit powers must be finite".into());
        }
        let mut sorted: Vec<f64> = self.sweep.p_dbm_values.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("sweep.p_dbm_values must be unique".into());
        }
        self.scenario.validate().map_err(|e| SimError::Config(e.to_string()))?;
        QuantSpec64::new(self.l_bits).map_err(|e| SimError::Config(e.to_string()))?;
        self.joint(self.converge.p_dbm)?
            .validate()
            .map_err(|e| SimError::Config(e.to_string()))
    }

    /// Solver settings for one transmit power.
    pub fn joint(&self, p_dbm: f64) -> Result<JointConfig64> {
        let mut j =
            JointConfig64::new(dbm_to_watts(p_dbm), self.l_bits).map_err(|e| SimError::Config(e.to_string()))?;
        j.precoder = self.precoder.clone();
        j.phase_designer = self.phase_designer.clone();
        j.optimizer = self.optimizer.clone();
        Ok(j)
    }

    /// SHA-256 over the canonical JSON form, with output locations blanked.
    pub fn hash(&self) -> String {
        let mut semantic = self.clone();
        semantic.output = OutputConfig::default();
        let canonical = serde_json::to_vec(&semantic).expect("configuration always serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

/// Parses `a..b` (half-open) or `a..=b` (inclusive).
pub fn parse_seed_range(s: &str) -> Result<Vec<u64>> {
    let err = || SimError::Config(format!("seed range `{s}` must look like `a..b` or `a..=b`"));
    let (lo, hi, inclusive) = if let Some((a, b)) = s.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = s.split_once("..") {
        (a, b, false)
    } else {
        return Err(err());
    };
    let lo: u64 = lo.trim().parse().map_err(|_| err())?;
    let hi: u64 = hi.trim().parse().map_err(|_| err())?;
    let seeds: Vec<u64> = if inclusive {
        (lo..=hi).collect()
    } else {
        (lo..hi).collect()
    };
    if seeds.is_empty() {
        return Err(SimError::Config(format!("seed range `{s}` is empty")));
    }
    Ok(seeds)
}
