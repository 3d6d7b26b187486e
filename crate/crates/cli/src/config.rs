//! Experiment configuration files.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use mgd_core::coreset::ClusteringMethod;
use mgd_core::data::{LabeledLatentSet, ManifoldSpec};
use mgd_core::guidance::{KernelKind, RadiusSchedule};
use mgd_core::rng::{derive_seed, rng_from_seed, stream};
use mgd_core::sampler::{
    CoresetConfig, DdpmVariance, DistillConfig, GuidanceConfig, OracleConfig, SamplerKind, ScheduleConfig,
};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that overrides `seeds.master`.
pub const SEED_ENV: &str = "MGD_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub spec: ManifoldSpec,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Radial noise for circle datasets; ignored for blobs.
    #[serde(default)]
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub master: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    pub knn_k: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { knn_k: 3 }
    }
}

/// Values swept by `mgd ablate`, one list per axis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Vec<KernelKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_stop: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_schedule: Option<Vec<RadiusSchedule>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clustering: Option<Vec<ClusteringMethod>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub coreset: CoresetConfig,
    #[serde(default)]
    pub guidance: GuidanceConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub sampler: SamplerKind,
    #[serde(default)]
    pub ddpm_variance: DdpmVariance,
    #[serde(default)]
    pub metrics: MetricsConfig,
    pub seeds: SeedConfig,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub ablation: AblationConfig,
}

impl ExperimentConfig {
    /// Parses JSON, reporting the field path of any type error.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow!("invalid config at {path}: {}", e.into_inner())
        })?;
        Ok(cfg)
    }

    /// Reads, applies the `MGD_SEED` override, and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_json(&text).with_context(|| format!("in {}", path.display()))?;
        if let Some(seed) = seed_override()? {
            cfg.seeds.master = seed;
        }
        cfg.validate().with_context(|| format!("in {}", path.display()))?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn distill_config(&self) -> DistillConfig {
        DistillConfig {
            schedule: self.schedule.clone(),
            coreset: self.coreset.clone(),
            guidance: self.guidance.clone(),
            oracle: self.oracle.clone(),
            sampler: self.sampler,
            ddpm_variance: self.ddpm_variance,
        }
    }

    pub fn set_distill_config(&mut self, d: DistillConfig) {
        self.schedule = d.schedule;
        self.coreset = d.coreset;
        self.guidance = d.guidance;
        self.oracle = d.oracle;
        self.sampler = d.sampler;
        self.ddpm_variance = d.ddpm_variance;
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!("schema_version: expected {SCHEMA_VERSION}, got {}", self.schema_version);
        }
        self.dataset.spec.validate().map_err(|e| anyhow!("dataset.spec: {e}"))?;
        if self.dataset.train_per_class == 0 {
            bail!("dataset.train_per_class: must be at least 1");
        }
        if self.dataset.test_per_class == 0 {
            bail!("dataset.test_per_class: must be at least 1");
        }
        if !(self.dataset.noise >= 0.0) {
            bail!("dataset.noise: must be nonnegative");
        }
        if self.seeds.repetitions == 0 {
            bail!("seeds.repetitions: must be at least 1");
        }
        if self.metrics.knn_k == 0 {
            bail!("metrics.knn_k: must be at least 1");
        }
        self.distill_config().validate(self.dataset.spec.dim()).map_err(|(path, msg)| anyhow!("{path}: {msg}"))
    }

    /// Seeds of the repetitions: master, master + 1, ...
    pub fn run_seeds(&self) -> Vec<u64> {
        (0..self.seeds.repetitions as u64).map(|r| self.seeds.master.wrapping_add(r)).collect()
    }

    /// Train and test sets for one seed.
    pub fn sample_data(&self, seed: u64) -> Result<(LabeledLatentSet, LabeledLatentSet)> {
        let d = &self.dataset;
        let train =
            d.spec.sample(d.train_per_class, d.noise, &mut rng_from_seed(derive_seed(seed, &[stream::DATA_TRAIN])))?;
        let test =
            d.spec.sample(d.test_per_class, d.noise, &mut rng_from_seed(derive_seed(seed, &[stream::DATA_TEST])))?;
        Ok((train, test))
    }
}

fn seed_override() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(e).context(SEED_ENV),
    }
}
