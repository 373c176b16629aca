//! Helpers for driving the `pillar-gp` binary from tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn pillar(args: &[&str]) -> Run {
    let Output { status, stdout, stderr } = Command::new(env!("CARGO_BIN_EXE_pillar-gp"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&stdout).into_owned(),
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
    }
}

pub fn ok(args: &[&str]) -> Run {
    let r = pillar(args);
    assert_eq!(r.code, 0, "{args:?} failed:\n{}", r.stderr);
    r
}

pub fn stream_entry(name: &str) -> Value {
    json!({
        "name": name,
        "train_features": format!("data/{name}_train.pnf"),
        "train_labels": "data/train_labels.csv",
        "test_features": format!("data/{name}_test.pnf"),
        "test_labels": "data/test_labels.csv",
    })
}

/// A small synthetic run over `streams`, `k` experts per stream.
pub fn small_config(streams: &[&str], c: usize, k: usize, per_class: usize, seed: u64) -> Value {
    json!({
        "seed": seed,
        "num_classes": c,
        "streams": streams.iter().map(|s| stream_entry(s)).collect::<Vec<_>>(),
        "partition": {"k": k, "per_class": per_class},
        "kernel_grid": {"log2_length_scales": [0.0, 1.0, 2.0], "log2_signal_variances": [0.0, 2.0]},
        "predictive": {"samples": 200},
        "output_dir": "out",
        "synth": {
            "num_classes": c,
            "per_class_train": k * per_class + 1,
            "per_class_test": 6,
            "latent_dim": 4,
            "separation": 1.5,
            "latent_noise": 0.3,
            "streams": streams.iter().enumerate()
                .map(|(i, s)| json!({"name": s, "dim": 5, "noise": 0.8 + 0.1 * i as f64}))
                .collect::<Vec<_>>(),
        }
    })
}

pub fn write_json(path: &Path, v: &Value) -> PathBuf {
    std::fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path.to_path_buf()
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `Fusion-all` over `Fusion-2/<group>` nodes over `Fusion-1/<stream>`
/// nodes over `k` experts each.
pub fn layered_tree(groups: &[(&str, &[&str])], k: usize) -> Value {
    let f1 = |s: &str| {
        json!({
            "label": format!("Fusion-1/{s}"),
            "children": (0..k).map(|e| json!({"stream": s, "expert": e})).collect::<Vec<_>>()
        })
    };
    json!({
        "label": "Fusion-all",
        "children": groups.iter().map(|(g, streams)| json!({
            "label": format!("Fusion-2/{g}"),
            "children": streams.iter().map(|s| f1(s)).collect::<Vec<_>>()
        })).collect::<Vec<_>>()
    })
}
