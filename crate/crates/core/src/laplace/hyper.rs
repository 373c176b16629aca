//! Grid search over `(ℓ, σ_f²)` maximizing the summed Laplace log marginal
//! likelihood of the experts of one partition (flat hyperprior).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::ExpertModel;
use crate::dataset::{FeatureMatrix, LabelVector, Partition};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// Log₂-spaced grid of length scales and signal variances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub log2_length_scales: Vec<f64>,
    pub log2_signal_variances: Vec<f64>,
}

impl Default for HyperGrid {
    /// `log₂ ℓ ∈ {−2..6}`, `log₂ σ_f² ∈ {−2..4}`.
    fn default() -> Self {
        Self {
            log2_length_scales: (-2..=6).map(f64::from).collect(),
            log2_signal_variances: (-2..=4).map(f64::from).collect(),
        }
    }
}

impl HyperGrid {
    pub fn single(length_scale: f64, signal_variance: f64) -> Self {
        Self {
            log2_length_scales: vec![length_scale.log2()],
            log2_signal_variances: vec![signal_variance.log2()],
        }
    }

    /// `(ℓ, σ_f²)` pairs, sorted ascending by `ℓ` then `σ_f²`, duplicates
    /// removed.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut ls: Vec<f64> = self.log2_length_scales.iter().map(|v| v.exp2()).collect();
        let mut sv: Vec<f64> = self.log2_signal_variances.iter().map(|v| v.exp2()).collect();
        for v in [&mut ls, &mut sv] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        ls.iter()
            .flat_map(|&l| sv.iter().map(move |&s| (l, s)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub length_scale: f64,
    pub signal_variance: f64,
    /// Summed expert log marginal likelihood; `None` if any expert failed.
    pub log_marginal: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperSearch {
    pub best: KernelSpec,
    pub best_log_marginal: f64,
    pub table: Vec<GridPoint>,
}

/// Summed Laplace log marginal likelihood over the experts of `partition`.
pub fn partition_log_marginal(
    x: &FeatureMatrix,
    y: &LabelVector,
    partition: &Partition,
    spec: &KernelSpec,
) -> Result<f64> {
    partition
        .subsets
        .iter()
        .enumerate()
        .map(|(k, subset)| {
            ExpertModel::train_subset(x, y, subset, spec)
                .map(|m| m.log_marginal())
                .map_err(|e| Error::expert(k, e))
        })
        .sum()
}

/// Evaluates every grid point and returns the maximizer. Ties go to the
/// smallest `ℓ`, then the smallest `σ_f²`. Grid points where any expert
/// fails to factorize or converge are skipped.
pub fn fit_hyperparameters(
    x: &FeatureMatrix,
    y: &LabelVector,
    partition: &Partition,
    grid: &HyperGrid,
) -> Result<HyperSearch> {
    y.check_paired(x)?;
    partition.validate(y.len())?;
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::InvalidParameter("hyperparameter grid is empty".into()));
    }
    let table: Vec<GridPoint> = points
        .par_iter()
        .map(|&(length_scale, signal_variance)| {
            let log_marginal = KernelSpec::new(signal_variance, length_scale)
                .and_then(|spec| partition_log_marginal(x, y, partition, &spec))
                .ok()
                .filter(|v| v.is_finite());
            GridPoint {
                length_scale,
                signal_variance,
                log_marginal,
            }
        })
        .collect();

    let mut best: Option<(&GridPoint, f64)> = None;
    for p in &table {
        if let Some(v) = p.log_marginal {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((p, v));
            }
        }
    }
    let (p, v) = best.ok_or(Error::GridExhausted { attempted: table.len() })?;
    Ok(HyperSearch {
        best: KernelSpec::new(p.signal_variance, p.length_scale)?,
        best_log_marginal: v,
        table,
    })
}
