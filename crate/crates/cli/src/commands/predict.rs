use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use pillar_gp::dataset::{apply_normalization, LabelVector};
use pillar_gp::kernel::KernelSpec;
use pillar_gp::laplace::{ClassPosterior, LatentPrediction};
use pillar_gp::poe::{classify, evaluate, fuse_tree, Evaluation, ExpertCollection, FusedPrediction, FusionNode, FusionTree, LeafKey};
use rayon::prelude::*;
use serde::Serialize;

use super::train::StreamManifest;
use super::{load_split, write_json};
use crate::config::Loaded;
use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct ExpertReport {
    pub expert: usize,
    pub num_train: usize,
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub confusion: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize)]
pub struct StreamReport {
    pub name: String,
    pub kernel: KernelSpec,
    pub log_marginal: f64,
    pub mean_expert_accuracy: f64,
    pub experts: Vec<ExpertReport>,
}

#[derive(Debug, Serialize)]
pub struct NodeReport {
    pub label: String,
    pub depth: usize,
    pub leaves: Vec<String>,
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub confusion: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub library_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub num_classes: usize,
    pub num_test: usize,
    pub predictive_samples: usize,
    pub root: String,
    pub streams: Vec<StreamReport>,
    pub nodes: Vec<NodeReport>,
}

#[derive(Debug, Serialize)]
struct Timings {
    load_seconds: f64,
    expert_prediction_seconds: f64,
    fusion_seconds: f64,
    total_seconds: f64,
}

/// One `Fusion-1/<stream>` node per stream under a `Fusion-all` root.
pub fn default_tree(streams: &[(String, usize)]) -> CliResult<FusionTree> {
    let per_stream: Vec<FusionNode> = streams
        .iter()
        .map(|(s, k)| FusionNode::internal(format!("Fusion-1/{s}"), (0..*k).map(|e| FusionNode::leaf(s.as_str(), e)).collect()))
        .collect();
    let root = match <[FusionNode; 1]>::try_from(per_stream) {
        Ok([only]) => only,
        Err(many) => FusionNode::internal("Fusion-all", many),
    };
    Ok(FusionTree::new(root)?)
}

fn tree_streams(tree: &FusionTree, cfg: &Loaded) -> CliResult<Vec<String>> {
    let used: Vec<&str> = tree.leaves().iter().map(|k| k.stream.as_str()).collect();
    for s in &used {
        if cfg.stream(s).is_none() {
            return Err(CliError::Usage(format!("fusion tree references unknown stream {s:?}")));
        }
    }
    Ok(cfg
        .config
        .streams
        .iter()
        .filter(|s| used.contains(&s.name.as_str()))
        .map(|s| s.name.clone())
        .collect())
}

fn classify_latent(pred: &LatentPrediction, samples: usize, seed: u64) -> (Vec<usize>, ClassPosterior) {
    classify(&FusedPrediction::from_latent(pred), samples, seed)
}

pub fn run(cfg: &Loaded, out: &Path, tree_flag: Option<&Path>) -> CliResult<RunReport> {
    let started = Instant::now();
    let c = &cfg.config;
    let (samples, seed) = (c.predictive.samples, c.seed);

    let tree = match tree_flag.map(Path::to_path_buf).or_else(|| c.fusion_tree.as_ref().map(|p| cfg.resolve(p))) {
        Some(path) => Some(FusionTree::load(&path).map_err(|e| CliError::Usage(e.to_string()))?),
        None => None,
    };
    let stream_names = match &tree {
        Some(t) => tree_streams(t, cfg)?,
        None => c.streams.iter().map(|s| s.name.clone()).collect(),
    };

    // Trained streams and their test data.
    let mut manifests = Vec::new();
    let mut collections = Vec::new();
    let mut truth: Option<LabelVector> = None;
    let mut tests = Vec::new();
    for name in &stream_names {
        let dir = out.join(name);
        let m = StreamManifest::load(&dir).map_err(|e| CliError::in_stream(name, format!("not trained? {e}")))?;
        if let Some(first) = manifests.first().map(|f: &StreamManifest| f.num_classes) {
            if m.num_classes != first {
                return Err(CliError::in_stream(name, format!("{} classes, other streams have {first}", m.num_classes)));
            }
        }
        let experts = m.load_experts(&dir).map_err(|e| CliError::in_stream(name, e))?;
        let files = cfg.stream(name).expect("checked above");
        let (xt, yt) = load_split(&cfg.resolve(&files.test_features), &cfg.resolve(&files.test_labels), Some(m.num_classes))
            .map_err(|e| CliError::in_stream(name, e))?;
        if xt.cols() != m.dim {
            return Err(CliError::in_stream(name, format!("test features have {} columns, model expects {}", xt.cols(), m.dim)));
        }
        match &truth {
            None => truth = Some(yt),
            Some(t) if *t != yt => {
                return Err(CliError::in_stream(name, "test labels differ from the other streams"));
            }
            _ => {}
        }
        tests.push(apply_normalization(&xt, &m.normalization)?);
        collections.push(ExpertCollection {
            stream: name.clone(),
            experts,
        });
        manifests.push(m);
    }
    let truth = truth.expect("at least one stream");
    let tree = match tree {
        Some(t) => t,
        None => default_tree(&collections.iter().map(|c| (c.stream.clone(), c.experts.len())).collect::<Vec<_>>())?,
    };
    tree.resolve(|k| {
        collections
            .iter()
            .any(|c| c.stream == k.stream && k.expert < c.experts.len())
    })
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let loaded = started.elapsed().as_secs_f64();

    // Expert latents, then per-expert evaluation.
    let t0 = Instant::now();
    let predictions: Vec<Vec<LatentPrediction>> = collections
        .iter()
        .zip(&tests)
        .map(|(coll, xt)| coll.predict(xt).map_err(|e| CliError::in_stream(&coll.stream, e)))
        .collect::<CliResult<_>>()?;
    let mut streams = Vec::new();
    for ((coll, m), preds) in collections.iter().zip(&manifests).zip(&predictions) {
        let experts: Vec<ExpertReport> = preds
            .par_iter()
            .enumerate()
            .map(|(k, p)| -> CliResult<ExpertReport> {
                let (labels, _) = classify_latent(p, samples, seed);
                let e = evaluate(&labels, &truth)?;
                Ok(ExpertReport {
                    expert: k,
                    num_train: coll.experts[k].num_train(),
                    accuracy: e.accuracy,
                    correct: e.correct,
                    total: e.total,
                    confusion: e.confusion,
                })
            })
            .collect::<CliResult<_>>()?;
        let mean_expert_accuracy = experts.iter().map(|e| e.accuracy).sum::<f64>() / experts.len() as f64;
        streams.push(StreamReport {
            name: coll.stream.clone(),
            kernel: m.kernel,
            log_marginal: m.log_marginal,
            mean_expert_accuracy,
            experts,
        });
    }
    let predicted = t0.elapsed().as_secs_f64();

    // Fusion along the tree.
    let t1 = Instant::now();
    let mut leaves = BTreeMap::new();
    for (coll, preds) in collections.iter().zip(predictions) {
        for (k, p) in preds.into_iter().enumerate() {
            leaves.insert(LeafKey::new(coll.stream.clone(), k), p);
        }
    }
    let (root, fused_nodes) = fuse_tree(&tree, &leaves)?;
    let evaluated: Vec<(NodeReport, ClassPosterior)> = fused_nodes
        .par_iter()
        .map(|n| -> CliResult<_> {
            let (labels, posterior) = classify(&n.prediction, samples, seed);
            let Evaluation {
                accuracy,
                correct,
                total,
                confusion,
            } = evaluate(&labels, &truth)?;
            let report = NodeReport {
                label: n.label.clone(),
                depth: n.depth,
                leaves: n.leaves.iter().map(ToString::to_string).collect(),
                accuracy,
                correct,
                total,
                confusion,
            };
            Ok((report, posterior))
        })
        .collect::<CliResult<_>>()?;
    let (root_label, root_posterior) = match (&tree.root, evaluated.first()) {
        (FusionNode::Internal { label, .. }, Some((_, post))) => (label.clone(), post.clone()),
        (FusionNode::Leaf(key), _) => (key.to_string(), classify(&root, samples, seed).1),
        _ => unreachable!("an internal root is the first fused node"),
    };
    let nodes: Vec<NodeReport> = evaluated.into_iter().map(|(r, _)| r).collect();
    let fused = t1.elapsed().as_secs_f64();

    let report = RunReport {
        library_version: pillar_gp::VERSION.to_string(),
        config_hash: cfg.hash(),
        seed,
        num_classes: truth.num_classes(),
        num_test: truth.len(),
        predictive_samples: samples,
        root: root_label,
        streams,
        nodes,
    };
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_json(&out.join("report.json"), &report)?;
    write_posteriors(&out.join("posteriors.csv"), &root_posterior)?;
    write_json(
        &out.join("timings.json"),
        &Timings {
            load_seconds: loaded,
            expert_prediction_seconds: predicted,
            fusion_seconds: fused,
            total_seconds: started.elapsed().as_secs_f64(),
        },
    )?;
    for n in &report.nodes {
        println!("{:<32} accuracy {:.4}", n.label, n.accuracy);
    }
    Ok(report)
}

fn write_posteriors(path: &Path, posterior: &ClassPosterior) -> CliResult<()> {
    let (n, c) = posterior.probs.shape();
    let mut text = String::from("point");
    for k in 0..c {
        write!(text, ",p{k}").unwrap();
    }
    text.push('\n');
    for t in 0..n {
        write!(text, "{t}").unwrap();
        for k in 0..c {
            write!(text, ",{}", posterior.probs[(t, k)]).unwrap();
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
