//! Distributed multi-class Gaussian process classification.
//!
//! Each feature stream is split into stratified, disjoint subsets; one
//! Laplace-approximate softmax GP classifier (an *expert*) is trained per
//! subset, and expert predictions are combined with the precision-weighted
//! product-of-experts rule along a user-supplied fusion hierarchy.
//!
//! ```no_run
//! use pillar_gp::dataset::{partition_dataset, LabelVector, FeatureMatrix};
//! use pillar_gp::kernel::KernelSpec;
//! use pillar_gp::poe::{train_collection, classify, FusionNode, FusionTree, LeafKey, hierarchical_fuse};
//! # fn run(x: FeatureMatrix, y: LabelVector, x_test: FeatureMatrix) -> pillar_gp::Result<()> {
//! let partition = partition_dataset(&y, 7, 10, 42)?;
//! let spec = KernelSpec::new(1.0, 4.0)?;
//! let experts = train_collection("rgb", &x, &y, &partition, &spec)?;
//! let preds = experts.predict(&x_test)?;
//! let leaves = preds.into_iter().enumerate().map(|(k, p)| (LeafKey::new("rgb", k), p)).collect();
//! let tree = FusionTree::new(FusionNode::internal(
//!     "Fusion-1/rgb",
//!     (0..7).map(|k| FusionNode::leaf("rgb", k)).collect(),
//! ))?;
//! let fused = hierarchical_fuse(&tree, &leaves)?;
//! let (labels, posterior) = classify(&fused, 1000, 7);
//! # Ok(()) }
//! ```

pub mod dataset;
mod error;
pub mod kernel;
pub mod laplace;
pub mod poe;
mod rng;

pub use error::{Error, Result};

/// Library version, recorded in run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
