use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dgp::{DgpSpec, Pattern};
use crate::error::{Result, SgplError};
use crate::hexgrid::GridSpec;
use crate::pairsampler::SamplerConfig;
use crate::plcore::FitOptions;

/// How datasets relate to replicates within one scenario cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetMode {
    /// One dataset per cell; replicates vary only the cell selection and pair draws.
    FixedDataset,
    /// A fresh dataset for every replicate.
    FreshDataset,
}

impl DatasetMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DatasetMode::FixedDataset => "fixed_dataset",
            DatasetMode::FreshDataset => "fresh_dataset",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    None,
    MlOracle,
}

/// Sampler parameters without a seed; seeds are derived per replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSettings {
    pub n_min_per_cell: usize,
    pub k_ring: u32,
    pub q_target: usize,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        let d = SamplerConfig::default();
        Self { n_min_per_cell: d.n_min_per_cell, k_ring: d.k_ring, q_target: d.q_target }
    }
}

impl SamplerSettings {
    pub fn with_seed(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            n_min_per_cell: self.n_min_per_cell,
            k_ring: self.k_ring,
            q_target: self.q_target,
            seed,
        }
    }
}

/// Everything in [`DgpSpec`] except the scenario axes and the seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DgpSettings {
    pub beta0: f64,
    pub beta1: f64,
    pub mu_x: f64,
    pub sigma_x: f64,
    pub sigma_eps2: f64,
    pub k_w: usize,
    pub k_taylor: usize,
    pub lambda_c: f64,
    pub sigma_cluster: f64,
}

impl Default for DgpSettings {
    fn default() -> Self {
        let d = DgpSpec::default();
        Self {
            beta0: d.beta0,
            beta1: d.beta1,
            mu_x: d.mu_x,
            sigma_x: d.sigma_x,
            sigma_eps2: d.sigma_eps2,
            k_w: d.k_w,
            k_taylor: d.k_taylor,
            lambda_c: d.lambda_c,
            sigma_cluster: d.sigma_cluster,
        }
    }
}

impl DgpSettings {
    pub fn spec(&self, n: usize, pattern: Pattern, lambda_sem: f64, seed: u64) -> DgpSpec {
        DgpSpec {
            n,
            pattern,
            beta0: self.beta0,
            beta1: self.beta1,
            mu_x: self.mu_x,
            sigma_x: self.sigma_x,
            sigma_eps2: self.sigma_eps2,
            lambda_sem,
            k_w: self.k_w,
            k_taylor: self.k_taylor,
            lambda_c: self.lambda_c,
            sigma_cluster: self.sigma_cluster,
            seed,
        }
    }
}

/// A Monte-Carlo experiment: the grid `n x lambda_sem x patterns` of scenario
/// cells, each run `reps` times. Read from JSON; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: Vec<usize>,
    pub lambda_sem: Vec<f64>,
    pub patterns: Vec<Pattern>,
    pub reps: usize,
    pub mode: DatasetMode,
    pub sampler: SamplerSettings,
    pub grid: GridSpec,
    pub dgp: DgpSettings,
    pub fit: FitOptions,
    pub benchmark: Benchmark,
    pub master_seed: u64,
    /// Concentrate the intercept out by subtracting full-sample means.
    pub demean: bool,
    /// Run replicates on the rayon pool. Timing runs force this off.
    pub parallel: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n: vec![5000, 10000, 25000],
            lambda_sem: vec![-0.3, 0.0, 0.3, 0.7],
            patterns: vec![Pattern::Uniform, Pattern::Clustered],
            reps: 500,
            mode: DatasetMode::FixedDataset,
            sampler: SamplerSettings::default(),
            grid: GridSpec::default(),
            dgp: DgpSettings::default(),
            fit: FitOptions::default(),
            benchmark: Benchmark::None,
            master_seed: 20_240_601,
            demean: true,
            parallel: true,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| SgplError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            SgplError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(SgplError::Config("reps must be at least 1".into()));
        }
        if self.n.is_empty() || self.lambda_sem.is_empty() || self.patterns.is_empty() {
            return Err(SgplError::Config("scenario grid is empty".into()));
        }
        self.grid.validate()?;
        self.sampler.with_seed(0).validate()?;
        self.fit.validate()?;
        for &n in &self.n {
            for &l in &self.lambda_sem {
                self.dgp.spec(n, Pattern::Uniform, l, 0).validate()?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_fields() {
        let cfg = ScenarioConfig::from_json_str(r#"{"n": [500], "reps": 3}"#).unwrap();
        assert_eq!(cfg.n, vec![500]);
        assert_eq!(cfg.reps, 3);
        assert_eq!(cfg.sampler.q_target, 1000);
        assert_eq!(cfg.grid, GridSpec::default());
        assert_eq!(cfg.lambda_sem.len(), 4);
    }

    #[test]
    fn full_round_trip() {
        let cfg = ScenarioConfig { reps: 7, mode: DatasetMode::FreshDataset, ..Default::default() };
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_json_str(&text).unwrap(), cfg);
    }

    #[test]
    fn invalid_configs() {
        for bad in [
            r#"{"reps": 0}"#,
            r#"{"n": []}"#,
            r#"{"lambda_sem": [1.0]}"#,
            r#"{"sampler": {"n_min_per_cell": 1}}"#,
            r#"{"grid": {"base_edge": -2}}"#,
            r#"{"patterns": ["hexagonal"]}"#,
            r#"{"unknown_key": 1}"#,
            r#"not json"#,
        ] {
            assert!(
                matches!(ScenarioConfig::from_json_str(bad), Err(SgplError::Config(_))),
                "{bad}"
            );
        }
    }
}
