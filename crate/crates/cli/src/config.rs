use std::path::{Path, PathBuf};

use fwmg::benchmark::{BenchmarkConfig, SweepConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Settings for one CLI invocation, read from `--config` and overridden by
/// command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset file; defaults to `<out>/dataset.json`.
    pub dataset: Option<PathBuf>,
    /// Relevance profile file; defaults to `<out>/profile.json`.
    pub profile: Option<PathBuf>,
    /// JSON list of situations for `generate`.
    pub situations: Option<PathBuf>,
    pub benchmark: BenchmarkConfig,
    pub sweep: SweepCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepCounts {
    pub demo_counts: Vec<usize>,
    pub pool_size: usize,
    pub max_combinations: usize,
    pub augment_counts: Vec<usize>,
    pub augment_repetitions: usize,
}

impl Default for SweepCounts {
    fn default() -> Self {
        let d = SweepConfig::default();
        SweepCounts {
            demo_counts: d.demo_counts,
            pool_size: d.pool_size,
            max_combinations: d.max_combinations,
            augment_counts: d.augment_counts,
            augment_repetitions: d.augment_repetitions,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::json(path, e))
    }

    /// Applies `--seed` to every seeded component.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(seed) = seed {
            self.benchmark.seed = seed;
            self.benchmark.optimizer.seed = seed;
            self.benchmark.sampler.seed = seed;
        }
        self
    }

    pub fn seed(&self) -> u64 {
        self.benchmark.seed
    }

    pub fn validate(&self) -> CliResult<()> {
        self.benchmark.validate()?;
        Ok(())
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            benchmark: self.benchmark.clone(),
            demo_counts: self.sweep.demo_counts.clone(),
            pool_size: self.sweep.pool_size,
            max_combinations: self.sweep.max_combinations,
            augment_counts: self.sweep.augment_counts.clone(),
            augment_repetitions: self.sweep.augment_repetitions,
        }
    }

    pub fn dataset_path(&self, out: &Path) -> PathBuf {
        self.dataset.clone().unwrap_or_else(|| out.join("dataset.json"))
    }

    pub fn profile_path(&self, out: &Path) -> PathBuf {
        self.profile.clone().unwrap_or_else(|| out.join("profile.json"))
    }
}

/// Fails unless every input file exists.
pub fn require_inputs(paths: &[&Path]) -> CliResult<()> {
    for path in paths {
        if !path.is_file() {
            return Err(CliError::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "input file does not exist"),
            ));
        }
    }
    Ok(())
}
