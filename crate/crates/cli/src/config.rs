//! Experiment configuration (TOML).
//!
//! Every field has a default, so an empty file (or no file at all) describes
//! the full 30 x 10^6-step experiment for all three models.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use swarm_lob::draws::{default_taus, FlatPolicy};
use swarm_lob::flow::{FlowParams, ModelKind};
use swarm_lob::sim::{ExpirePolicy, RngAlgorithm, SimConfig};
use swarm_lob::tail::ResidualScale;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub models: Vec<ModelKind>,
    pub simulation: SimulationConfig,
    pub flow: FlowParams,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub steps: u64,
    pub replications: u32,
    pub seed: u64,
    pub rng: RngAlgorithm,
    pub expire_policy: ExpirePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub flat_policy: FlatPolicy,
    /// Class width of the binned cumulative table and the KS test.
    pub class_width: u64,
    /// Class width used when locating the tail threshold.
    pub tail_class_width: u64,
    pub top_fraction: f64,
    /// Smallest draw size used by the linearization and sum-of-squares
    /// comparisons.
    pub cutoff: u64,
    /// Smallest draw size used by the KS comparison (0 = all draws).
    pub ks_cutoff: u64,
    pub taus: Vec<usize>,
    pub max_lag: usize,
    pub residual_scale: ResidualScale,
    pub continuity_correction: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            models: ModelKind::ALL.to_vec(),
            simulation: SimulationConfig::default(),
            flow: FlowParams::default(),
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let sim = SimConfig::new(ModelKind::Plain);
        SimulationConfig {
            steps: sim.steps,
            replications: sim.replications,
            seed: sim.seed,
            rng: sim.rng,
            expire_policy: sim.expire_policy,
        }
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            flat_policy: FlatPolicy::default(),
            class_width: 15,
            tail_class_width: 1,
            top_fraction: 0.005,
            cutoff: 16,
            ks_cutoff: 0,
            taus: default_taus(),
            max_lag: 50,
            residual_scale: ResidualScale::default(),
            continuity_correction: false,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// SHA-256 of the canonical TOML form, leaving out the output directory
    /// so the same experiment hashes the same wherever it is written.
    pub fn sha256(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        format!("{:x}", Sha256::digest(c.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            bail!("no models selected");
        }
        for model in &self.models {
            self.sim_config(*model).validate()?;
        }
        let a = &self.analysis;
        if a.class_width == 0 || a.tail_class_width == 0 {
            bail!("class widths must be positive");
        }
        if !(a.top_fraction > 0.0 && a.top_fraction <= 1.0) {
            bail!("top_fraction must lie in (0, 1]");
        }
        if a.taus.is_empty() || a.taus.contains(&0) {
            bail!("taus must be non-empty and positive");
        }
        if a.max_lag == 0 {
            bail!("max_lag must be positive");
        }
        Ok(())
    }

    pub fn sim_config(&self, model: ModelKind) -> SimConfig {
        SimConfig {
            model,
            flow: self.flow,
            steps: self.simulation.steps,
            replications: self.simulation.replications,
            seed: self.simulation.seed,
            rng: self.simulation.rng,
            expire_policy: self.simulation.expire_policy,
        }
    }

    /// Whether the run matches the full experiment size (30 x 10^6 steps).
    pub fn is_full_scale(&self) -> bool {
        self.simulation.steps >= 1_000_000 && self.simulation.replications >= 30
    }
}
