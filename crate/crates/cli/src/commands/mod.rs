pub mod evaluate;
pub mod predict;
pub mod synth;
pub mod train;

use std::path::Path;

use pillar_gp::dataset::{load_features, load_labels, FeatureFormat, FeatureMatrix, LabelVector};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Features and labels of one split, checked for equal length.
pub fn load_split(features: &Path, labels: &Path, num_classes: Option<usize>) -> CliResult<(FeatureMatrix, LabelVector)> {
    let x = load_features(features, FeatureFormat::from_path(features))?;
    let y = load_labels(labels, num_classes)?;
    y.check_paired(&x)
        .map_err(|e| CliError::Runtime(format!("{} vs {}: {e}", features.display(), labels.display())))?;
    Ok((x, y))
}
