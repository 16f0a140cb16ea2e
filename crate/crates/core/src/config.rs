//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//! out_dir = "out"
//! cache_dir = "cache"
//! experiments = ["kernels-check", "reconstruct"]
//!
//! [structure]
//! kappa = [1.0]          # one entry: rank one on ℝ; two: Z₂ × Z₂ on ℝ²
//!
//! [domain]
//! half_width = 48.0
//! nodes = 3072           # per axis
//! order = 2              # Gauss points per cell
//!
//! [scales]
//! k_min = -2
//! k_max = 2
//! m0 = "auto"            # or an integer
//!
//! [[besov]]
//! alpha = 0.1
//! p = 2.0
//! q = 2.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::besov::BesovParams;
use crate::error::{Error, Result};
use crate::frame::FrameConfig;
use crate::geometry::{hex, DunklStructure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    KernelsCheck,
    BesovNorm,
    Reconstruct,
    Duality,
    OrthoDecay,
    CzoBound,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::KernelsCheck => "kernels-check",
            ExperimentKind::BesovNorm => "besov-norm",
            ExperimentKind::Reconstruct => "reconstruct",
            ExperimentKind::Duality => "duality",
            ExperimentKind::OrthoDecay => "ortho-decay",
            ExperimentKind::CzoBound => "czo-bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConfig {
    pub kappa: Vec<f64>,
}

impl StructureConfig {
    pub fn build(&self) -> Result<DunklStructure> {
        match self.kappa.as_slice() {
            [k] => DunklStructure::rank_one(*k),
            ks => DunklStructure::product(ks),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub half_width: f64,
    pub nodes: usize,
    pub order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

/// A fixed M0 or `"auto"` (smallest M0 whose probe remainder is below 1/2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum M0Choice {
    Fixed(u32),
    Auto(AutoKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleConfig {
    pub k_min: i32,
    pub k_max: i32,
    pub m0: M0Choice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesovEntry {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
}

/// Knobs of the individual experiments; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSettings {
    /// Random test functions per batch.
    pub samples: usize,
    pub neumann_order: usize,
    /// Pairs per duality case.
    pub duality_pairs: usize,
    /// CZ regularity exponent ε₀.
    pub epsilon: f64,
    /// Composite scales for the decay fit run over [−r, r].
    pub decay_radius: i32,
    pub decay_m0: u32,
    pub czo_m0: Vec<u32>,
    pub czo_samples: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            samples: 20,
            neumann_order: 30,
            duality_pairs: 200,
            epsilon: 0.25,
            decay_radius: 6,
            decay_m0: 1,
            czo_m0: vec![1, 2, 3],
            czo_samples: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
    #[serde(default)]
    pub parallel: bool,
    #[serde(default)]
    pub experiments: Vec<ExperimentKind>,
    pub structure: StructureConfig,
    pub domain: DomainConfig,
    pub scales: ScaleConfig,
    #[serde(default)]
    pub besov: Vec<BesovEntry>,
    #[serde(default)]
    pub settings: ExperimentSettings,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// SHA-256 of the canonical TOML form, leaving out fields that only
    /// steer execution (output and cache paths, parallelism).
    pub fn hash(&self) -> Result<String> {
        let canonical = Self {
            out_dir: PathBuf::new(),
            cache_dir: PathBuf::new(),
            parallel: false,
            ..self.clone()
        };
        Ok(hex(&Sha256::digest(canonical.to_toml()?.as_bytes())))
    }

    /// Field-level checks; Besov parameters must satisfy the frame hypotheses.
    pub fn validate(&self) -> Result<()> {
        if i64::try_from(self.seed).is_err() {
            return Err(Error::Config(format!("seed: {} exceeds the TOML integer range (max {})", self.seed, i64::MAX)));
        }
        let s = self.structure.build().map_err(|e| Error::Config(format!("structure: {e}")))?;
        let d = &self.domain;
        if !(d.half_width > 0.0) || d.nodes == 0 || d.order == 0 || !d.nodes.is_multiple_of(2 * d.order) {
            return Err(Error::Config(format!(
                "domain: need half_width > 0 and nodes a positive multiple of 2·order, got {d:?}"
            )));
        }
        if self.scales.k_max < self.scales.k_min {
            return Err(Error::Config(format!(
                "scales: k_max = {} is below k_min = {}",
                self.scales.k_max, self.scales.k_min
            )));
        }
        for (i, b) in self.besov.iter().enumerate() {
            BesovParams::new(b.alpha, b.p, b.q, s.homogeneous_dim()).map_err(|e| Error::Config(format!("besov[{i}]: {e}")))?;
        }
        let st = &self.settings;
        if !(st.epsilon > 0.0 && st.epsilon <= 1.0) {
            return Err(Error::Config(format!("settings.epsilon must lie in (0, 1], got {}", st.epsilon)));
        }
        if st.samples == 0 || st.czo_samples == 0 {
            return Err(Error::Config("settings: sample counts must be positive".into()));
        }
        Ok(())
    }

    pub fn besov_params(&self, s: &DunklStructure) -> Result<Vec<BesovParams>> {
        self.besov
            .iter()
            .map(|b| BesovParams::new(b.alpha, b.p, b.q, s.homogeneous_dim()))
            .collect()
    }

    /// Frame layout for a given M0.
    pub fn frame(&self, m0: u32) -> FrameConfig {
        let d = &self.domain;
        let cells = d.nodes / d.order;
        FrameConfig {
            k_min: self.scales.k_min,
            k_max: self.scales.k_max,
            m0,
            half_width: d.half_width,
            base_cell: 2.0 * d.half_width / cells as f64,
            order: d.order,
        }
    }
}

/// Seed for one experiment, derived from the run seed and the experiment name.
pub fn derived_seed(seed: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}
