//! Product-of-experts fusion of Gaussian latent predictions.
//!
//! For children with means `μ_k` and variances `σ_k²`, the fused precision
//! is `Σ_k σ_k⁻²` and the fused mean is the precision-weighted mean. Fusion
//! runs per test point and per class on the latents; class probabilities are
//! computed once from the fused latents.

mod eval;
mod tree;

pub use eval::{evaluate, Evaluation};
pub use tree::{FusionNode, FusionTree, LeafKey};

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dataset::{FeatureMatrix, LabelVector, Partition};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::laplace::{latent_predict, predictive_density, ClassPosterior, ExpertModel, LatentPrediction, VARIANCE_FLOOR};

/// Experts trained on disjoint subsets of one feature stream.
#[derive(Clone, Debug)]
pub struct ExpertCollection {
    pub stream: String,
    pub experts: Vec<ExpertModel>,
}

impl ExpertCollection {
    pub fn num_classes(&self) -> usize {
        self.experts.first().map_or(0, |e| e.num_classes())
    }

    pub fn dim(&self) -> usize {
        self.experts.first().map_or(0, |e| e.dim())
    }

    pub fn predict(&self, x_test: &FeatureMatrix) -> Result<Vec<LatentPrediction>> {
        self.experts
            .par_iter()
            .enumerate()
            .map(|(k, e)| latent_predict(e, x_test).map_err(|err| Error::expert(k, err)))
            .collect()
    }
}

/// Trains one expert per subset. Experts train concurrently; the result does
/// not depend on scheduling.
pub fn train_collection(
    stream: &str,
    x: &FeatureMatrix,
    y: &LabelVector,
    partition: &Partition,
    spec: &KernelSpec,
) -> Result<ExpertCollection> {
    y.check_paired(x)?;
    partition.validate(y.len())?;
    let experts = partition
        .subsets
        .par_iter()
        .enumerate()
        .map(|(k, subset)| ExpertModel::train_subset(x, y, subset, spec).map_err(|e| Error::expert(k, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpertCollection {
        stream: stream.to_string(),
        experts,
    })
}

/// Fuses `(mean, precision)` pairs in the given order.
#[inline]
fn fuse_precision<I: Iterator<Item = (f64, f64)>>(children: I) -> (f64, f64) {
    let mut precision = 0.0;
    let mut weighted = 0.0;
    for (mean, p) in children {
        precision += p;
        weighted += p * mean;
    }
    (weighted / precision, precision)
}

/// Precision-weighted fusion of scalar Gaussians `(μ, σ²)`. A single child
/// is returned unchanged.
pub fn fuse_poe(children: &[(f64, f64)]) -> Result<(f64, f64)> {
    if children.is_empty() {
        return Err(Error::EmptyFusion);
    }
    if let Some((index, &(_, variance))) = children.iter().enumerate().find(|(_, (_, v))| !(*v > 0.0)) {
        return Err(Error::NonPositiveVariance { index, variance });
    }
    if let [only] = children {
        return Ok(*only);
    }
    let (mean, precision) = fuse_precision(children.iter().map(|&(m, v)| (m, 1.0 / v)));
    Ok((mean, 1.0 / precision))
}

/// Fused latent means, variances and precisions (`n_test × C`).
#[derive(Clone, Debug, PartialEq)]
pub struct FusedPrediction {
    pub mean: DMatrix<f64>,
    pub variance: DMatrix<f64>,
    pub precision: DMatrix<f64>,
}

impl FusedPrediction {
    /// Leaf view of an expert prediction; variances are floored at
    /// `VARIANCE_FLOOR`.
    pub fn from_latent(pred: &LatentPrediction) -> Self {
        let variance = pred.variance.map(|v| v.max(VARIANCE_FLOOR));
        Self {
            mean: pred.mean.clone(),
            precision: variance.map(|v| 1.0 / v),
            variance,
        }
    }

    pub fn as_latent(&self) -> LatentPrediction {
        LatentPrediction {
            mean: self.mean.clone(),
            variance: self.variance.clone(),
        }
    }

    fn fuse(children: &[FusedPrediction]) -> Self {
        if let [only] = children {
            return only.clone();
        }
        let (n, c) = children[0].mean.shape();
        let mut mean = DMatrix::zeros(n, c);
        let mut precision = DMatrix::zeros(n, c);
        for j in 0..c {
            for i in 0..n {
                let (m, p) = fuse_precision(children.iter().map(|ch| (ch.mean[(i, j)], ch.precision[(i, j)])));
                mean[(i, j)] = m;
                precision[(i, j)] = p;
            }
        }
        Self {
            mean,
            variance: precision.map(|p| 1.0 / p),
            precision,
        }
    }
}

/// Fused prediction at one internal node of a tree.
#[derive(Clone, Debug)]
pub struct NodeFusion {
    pub label: String,
    pub depth: usize,
    pub leaves: Vec<LeafKey>,
    pub prediction: FusedPrediction,
}

fn check_shapes(tree: &FusionTree, leaves: &BTreeMap<LeafKey, LatentPrediction>) -> Result<()> {
    let mut shape = None;
    for key in tree.leaves() {
        let pred = leaves
            .get(key)
            .ok_or_else(|| Error::Tree(format!("missing prediction for leaf {key}")))?;
        let s = pred.mean.shape();
        if pred.variance.shape() != s {
            return Err(Error::Inconsistent(format!("leaf {key} mean/variance shapes differ")));
        }
        match shape {
            None => shape = Some(s),
            Some(expected) if expected != s => {
                return Err(Error::Inconsistent(format!(
                    "leaf {key} covers {}x{} (points x classes), expected {}x{}",
                    s.0, s.1, expected.0, expected.1
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Fuses bottom-up and returns every internal node's fusion in pre-order,
/// together with the root's.
pub fn fuse_tree(
    tree: &FusionTree,
    leaves: &BTreeMap<LeafKey, LatentPrediction>,
) -> Result<(FusedPrediction, Vec<NodeFusion>)> {
    check_shapes(tree, leaves)?;
    fn walk(
        node: &FusionNode,
        depth: usize,
        leaves: &BTreeMap<LeafKey, LatentPrediction>,
        out: &mut Vec<Option<NodeFusion>>,
    ) -> (FusedPrediction, Vec<LeafKey>) {
        match node {
            FusionNode::Leaf(key) => (FusedPrediction::from_latent(&leaves[key]), vec![key.clone()]),
            FusionNode::Internal { label, children } => {
                let slot = out.len();
                out.push(None);
                let mut preds = Vec::with_capacity(children.len());
                let mut keys = Vec::new();
                for child in children {
                    let (p, k) = walk(child, depth + 1, leaves, out);
                    preds.push(p);
                    keys.extend(k);
                }
                let fused = FusedPrediction::fuse(&preds);
                out[slot] = Some(NodeFusion {
                    label: label.clone(),
                    depth,
                    leaves: keys.clone(),
                    prediction: fused.clone(),
                });
                (fused, keys)
            }
        }
    }
    let mut nodes = Vec::new();
    let (root, _) = walk(&tree.root, 0, leaves, &mut nodes);
    Ok((root, nodes.into_iter().map(|n| n.expect("filled after children")).collect()))
}

/// Fuses the leaf predictions bottom-up through `tree`, children in declared
/// order at every node.
pub fn hierarchical_fuse(tree: &FusionTree, leaves: &BTreeMap<LeafKey, LatentPrediction>) -> Result<FusedPrediction> {
    fuse_tree(tree, leaves).map(|(root, _)| root)
}

/// Class probabilities from fused latents, and the argmax label per point
/// (lowest class index on exact ties).
pub fn classify(fused: &FusedPrediction, num_samples: usize, seed: u64) -> (Vec<usize>, ClassPosterior) {
    let posterior = predictive_density(&fused.as_latent(), num_samples, seed);
    (posterior.argmax(), posterior)
}
