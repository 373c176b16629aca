//! JSON run configuration. Relative paths resolve against the directory of
//! the config file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use pillar_gp::dataset::{StreamSpec, SynthConfig};
use pillar_gp::laplace::{HyperGrid, DEFAULT_SAMPLES};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamFiles {
    pub name: String,
    pub train_features: PathBuf,
    pub train_labels: PathBuf,
    pub test_features: PathBuf,
    pub test_labels: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub k: usize,
    pub per_class: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictiveConfig {
    pub samples: usize,
}

impl Default for PredictiveConfig {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
        }
    }
}

/// Synthetic data parameters; the seed is the run seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub num_classes: usize,
    pub per_class_train: usize,
    pub per_class_test: usize,
    pub latent_dim: usize,
    pub separation: f64,
    #[serde(default)]
    pub latent_noise: f64,
    #[serde(default)]
    pub shared_projection: bool,
    pub streams: Vec<StreamSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds partitioning, synthesis and predictive sampling.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_classes: Option<usize>,
    pub streams: Vec<StreamFiles>,
    pub partition: PartitionConfig,
    #[serde(default)]
    pub kernel_grid: HyperGrid,
    #[serde(default)]
    pub predictive: PredictiveConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion_tree: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSection>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A parsed config together with the directory its paths are relative to.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl Loaded {
    pub fn read(path: &Path, seed_override: Option<u64>) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        if let Some(seed) = seed_override {
            config.seed = seed;
        }
        validate(&config)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        match flag {
            Some(dir) => dir.to_path_buf(),
            None => self.resolve(&self.config.output_dir),
        }
    }

    pub fn stream(&self, name: &str) -> Option<&StreamFiles> {
        self.config.streams.iter().find(|s| s.name == name)
    }

    /// SHA-256 of the canonical JSON of the effective config, excluding the
    /// output directory.
    pub fn hash(&self) -> String {
        let mut c = self.config.clone();
        c.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn synth_config(&self) -> CliResult<SynthConfig> {
        let s = self
            .config
            .synth
            .as_ref()
            .ok_or_else(|| CliError::Usage("config has no \"synth\" section".into()))?;
        Ok(SynthConfig {
            num_classes: s.num_classes,
            per_class_train: s.per_class_train,
            per_class_test: s.per_class_test,
            latent_dim: s.latent_dim,
            separation: s.separation,
            latent_noise: s.latent_noise,
            shared_projection: s.shared_projection,
            streams: s.streams.clone(),
            seed: self.config.seed,
        })
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
}

fn validate(c: &RunConfig) -> CliResult<()> {
    let bad = |m: String| Err(CliError::Usage(m));
    if c.streams.is_empty() {
        return bad("config lists no streams".into());
    }
    let mut names = HashSet::new();
    let mut feature_paths = HashSet::new();
    for s in &c.streams {
        if !valid_name(&s.name) {
            return bad(format!("invalid stream name {:?} (use letters, digits, '-', '_', '.')", s.name));
        }
        if !names.insert(s.name.as_str()) {
            return bad(format!("duplicate stream name {:?}", s.name));
        }
        for p in [&s.train_features, &s.test_features] {
            if !feature_paths.insert(p) {
                return bad(format!("feature file {} is used twice", p.display()));
            }
        }
        if s.train_labels == s.test_labels {
            return bad(format!("stream {:?} uses one file for train and test labels", s.name));
        }
    }
    if c.partition.k < 1 || c.partition.per_class < 1 {
        return bad("partition.k and partition.per_class must be >= 1".into());
    }
    if c.predictive.samples < 1 {
        return bad("predictive.samples must be >= 1".into());
    }
    if c.kernel_grid.points().is_empty() {
        return bad("kernel_grid is empty".into());
    }
    if c.num_classes.is_some_and(|n| n < 2) {
        return bad("num_classes must be >= 2".into());
    }
    if let Some(s) = &c.synth {
        if s.num_classes < 2 {
            return bad("synth.num_classes must be >= 2".into());
        }
        if s.per_class_train < 1 || s.per_class_test < 1 {
            return bad("synth.per_class_train and synth.per_class_test must be >= 1".into());
        }
        if s.latent_dim < 1 || s.streams.is_empty() || s.streams.iter().any(|t| t.dim < 1) {
            return bad("synth needs latent_dim >= 1 and at least one stream of dim >= 1".into());
        }
        for t in &s.streams {
            if !c.streams.iter().any(|f| f.name == t.name) {
                return bad(format!("synth stream {:?} has no entry in \"streams\"", t.name));
            }
        }
    }
    Ok(())
}
