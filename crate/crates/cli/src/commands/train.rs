use std::path::{Path, PathBuf};
use std::time::Instant;

use pillar_gp::dataset::{apply_normalization, fit_normalization, partition_dataset, NormalizationStats};
use pillar_gp::kernel::KernelSpec;
use pillar_gp::laplace::{fit_hyperparameters, ExpertModel, GridPoint};
use pillar_gp::poe::train_collection;
use serde::{Deserialize, Serialize};

use super::{load_split, read_json, write_json};
use crate::config::{Loaded, StreamFiles};
use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "stream.json";

/// Everything prediction needs to know about one trained stream besides the
/// expert files themselves.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StreamManifest {
    pub name: String,
    pub num_classes: usize,
    pub dim: usize,
    pub normalization: NormalizationStats,
    /// Grid maximizer shared by every expert.
    pub kernel: KernelSpec,
    pub log_marginal: f64,
    pub partition_k: usize,
    pub per_class: usize,
    pub seed: u64,
    pub experts: Vec<String>,
    pub grid: Vec<GridPoint>,
}

impl StreamManifest {
    pub fn load(dir: &Path) -> CliResult<Self> {
        read_json(&dir.join(MANIFEST))
    }

    pub fn load_experts(&self, dir: &Path) -> CliResult<Vec<ExpertModel>> {
        self.experts.iter().map(|f| Ok(ExpertModel::load(dir.join(f))?)).collect()
    }
}

pub fn expert_file(k: usize) -> String {
    format!("expert_{k:02}.pgp")
}

fn partial_dir(out: &Path, stream: &str) -> PathBuf {
    out.join(format!(".{stream}.partial"))
}

/// Trains every stream. Each stream is built in a scratch directory and
/// moved into place when complete; on any failure, everything this run
/// wrote is removed.
pub fn run(cfg: &Loaded, out: &Path) -> CliResult<Vec<StreamManifest>> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut done: Vec<PathBuf> = Vec::new();
    let mut manifests = Vec::new();
    for files in &cfg.config.streams {
        let scratch = partial_dir(out, &files.name);
        let result = train_stream(cfg, files, &scratch).and_then(|m| {
            let target = out.join(&files.name);
            if target.exists() {
                std::fs::remove_dir_all(&target).map_err(|e| CliError::io(&target, e))?;
            }
            std::fs::rename(&scratch, &target).map_err(|e| CliError::io(&target, e))?;
            done.push(target);
            Ok(m)
        });
        match result {
            Ok(m) => manifests.push(m),
            Err(e) => {
                let _ = std::fs::remove_dir_all(&scratch);
                for d in &done {
                    let _ = std::fs::remove_dir_all(d);
                }
                return Err(CliError::in_stream(&files.name, e));
            }
        }
    }
    Ok(manifests)
}

fn train_stream(cfg: &Loaded, files: &StreamFiles, dir: &Path) -> CliResult<StreamManifest> {
    let c = &cfg.config;
    let started = Instant::now();
    let (x, y) = load_split(
        &cfg.resolve(&files.train_features),
        &cfg.resolve(&files.train_labels),
        c.num_classes,
    )?;
    let stats = fit_normalization(&x);
    let x = apply_normalization(&x, &stats)?;
    let partition = partition_dataset(&y, c.partition.k, c.partition.per_class, c.seed)?;
    let search = fit_hyperparameters(&x, &y, &partition, &c.kernel_grid)?;
    let experts = train_collection(&files.name, &x, &y, &partition, &search.best)?;

    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut names = Vec::with_capacity(experts.experts.len());
    for (k, e) in experts.experts.iter().enumerate() {
        let name = expert_file(k);
        e.save(dir.join(&name))?;
        names.push(name);
    }
    let manifest = StreamManifest {
        name: files.name.clone(),
        num_classes: y.num_classes(),
        dim: x.cols(),
        normalization: stats,
        kernel: search.best,
        log_marginal: search.best_log_marginal,
        partition_k: c.partition.k,
        per_class: c.partition.per_class,
        seed: c.seed,
        experts: names,
        grid: search.table,
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    eprintln!(
        "trained {}: {} experts, length_scale {}, signal_variance {}, log marginal {:.4} ({:.1}s)",
        files.name,
        manifest.experts.len(),
        manifest.kernel.length_scale,
        manifest.kernel.signal_variance,
        manifest.log_marginal,
        started.elapsed().as_secs_f64()
    );
    Ok(manifest)
}
