use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use pillar_gp::dataset::{save_features, save_labels, synth_streams, FeatureFormat};
use sha2::{Digest, Sha256};

use super::ensure_parent;
use crate::config::Loaded;
use crate::error::{CliError, CliResult};

/// Writes each synthetic stream to the feature paths its `streams` entry
/// declares, and the shared labels to every declared label path. Prints a
/// manifest of `sha256  path` lines.
pub fn run(cfg: &Loaded) -> CliResult<Vec<PathBuf>> {
    let data = synth_streams(&cfg.synth_config()?).map_err(|e| match e {
        pillar_gp::Error::InvalidParameter(m) => CliError::Usage(m),
        other => other.into(),
    })?;
    let mut written = Vec::new();
    let mut train_labels = BTreeSet::new();
    let mut test_labels = BTreeSet::new();
    for s in &data.streams {
        let files = cfg.stream(&s.name).expect("validated against streams");
        for (path, x) in [(&files.train_features, &s.train), (&files.test_features, &s.test)] {
            let path = cfg.resolve(path);
            ensure_parent(&path)?;
            save_features(&path, x, FeatureFormat::from_path(&path))?;
            written.push(path);
        }
        train_labels.insert(cfg.resolve(&files.train_labels));
        test_labels.insert(cfg.resolve(&files.test_labels));
    }
    if let Some(p) = train_labels.intersection(&test_labels).next() {
        return Err(CliError::Usage(format!("{} is declared as both train and test labels", p.display())));
    }
    for (paths, y) in [(train_labels, &data.train_labels), (test_labels, &data.test_labels)] {
        for path in paths {
            ensure_parent(&path)?;
            save_labels(&path, y)?;
            written.push(path);
        }
    }
    for path in &written {
        println!("{}  {}", file_digest(path)?, path.display());
    }
    Ok(written)
}

fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
