//! Labeled feature sets: containers, file formats, z-score normalization,
//! stratified partitioning and synthetic multi-stream data.

mod io;
mod synth;

pub use io::{
    decode_pnf1, encode_pnf1, load_features, load_labels, parse_labels, save_features,
    save_labels, FeatureFormat, PNF1_MAGIC,
};
pub use synth::{synth_streams, StreamSpec, SynthConfig, SynthData, SynthStream};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Dense `rows × cols` matrix of features, one sample per row, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::Empty("feature matrix has no rows"));
        }
        if cols == 0 {
            return Err(Error::Empty("feature matrix has no columns"));
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "feature matrix values",
                expected: rows * cols,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "feature matrix row",
                    expected: cols,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::InvalidParameter(format!(
                    "row index {i} out of range for {} rows",
                    self.rows
                )));
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.cols, values)
    }

    /// Rounds every value to the nearest `f32`. Models store their training
    /// inputs at PNF1 precision, so they are trained on rounded values too.
    pub fn round_to_f32(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| v as f32 as f64).collect(),
        }
    }
}

/// Integer class labels in `[0, num_classes)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("label vector"));
        }
        if num_classes < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(Error::LabelOutOfRange {
                index,
                label: label as i64,
                num_classes,
            });
        }
        Ok(Self {
            labels,
            num_classes,
        })
    }

    /// Infers the class count as `1 + max label`.
    pub fn inferred(labels: Vec<usize>) -> Result<Self> {
        let c = labels.iter().max().map(|m| m + 1).unwrap_or(0);
        Self::new(labels, c)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let labels = indices
            .iter()
            .map(|&i| {
                self.labels.get(i).copied().ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "label index {i} out of range for {} labels",
                        self.labels.len()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, self.num_classes)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn check_paired(&self, x: &FeatureMatrix) -> Result<()> {
        if self.len() != x.rows() {
            return Err(Error::LengthMismatch {
                left: x.rows(),
                right: self.len(),
            });
        }
        Ok(())
    }
}

/// Columns whose training standard deviation falls below this are centered
/// but not scaled.
pub const DEGENERATE_STD: f64 = 1e-12;

/// Per-dimension training-set mean and (population) standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn fit_normalization(x: &FeatureMatrix) -> NormalizationStats {
    let n = x.rows() as f64;
    let d = x.cols();
    let mut mean = vec![0.0; d];
    for i in 0..x.rows() {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut var = vec![0.0; d];
    for i in 0..x.rows() {
        for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
    NormalizationStats { mean, std }
}

pub fn apply_normalization(x: &FeatureMatrix, stats: &NormalizationStats) -> Result<FeatureMatrix> {
    let d = x.cols();
    if stats.mean.len() != d || stats.std.len() != d {
        return Err(Error::DimensionMismatch {
            context: "normalization stats",
            expected: d,
            found: stats.mean.len().min(stats.std.len()),
        });
    }
    let mut values = x.values().to_vec();
    for row in values.chunks_mut(d) {
        for ((v, m), s) in row.iter_mut().zip(&stats.mean).zip(&stats.std) {
            *v -= m;
            if *s >= DEGENERATE_STD {
                *v /= s;
            }
        }
    }
    FeatureMatrix::new(x.rows(), d, values)
}

/// Disjoint subsets of sample indices into a parent dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub subsets: Vec<Vec<usize>>,
    pub seed: u64,
}

impl Partition {
    /// A single subset holding every sample, in order.
    pub fn whole(n: usize) -> Self {
        Self {
            subsets: vec![(0..n).collect()],
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// Checks disjointness and index range against a dataset of `n` samples.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for (k, subset) in self.subsets.iter().enumerate() {
            if subset.is_empty() {
                return Err(Error::InvalidParameter(format!("subset {k} is empty")));
            }
            for &i in subset {
                if i >= n {
                    return Err(Error::InvalidParameter(format!(
                        "subset {k} index {i} out of range for {n} samples"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidParameter(format!(
                        "index {i} appears in more than one subset"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Draws `k` disjoint subsets, each holding exactly `per_class` samples of
/// every class, sampled without replacement. Leftover samples are unassigned.
pub fn partition_dataset(y: &LabelVector, k: usize, per_class: usize, seed: u64) -> Result<Partition> {
    if k == 0 || per_class == 0 {
        return Err(Error::InvalidParameter(format!(
            "partition needs k >= 1 and per_class >= 1 (got k={k}, per_class={per_class})"
        )));
    }
    let required = k * per_class;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); y.num_classes()];
    for (i, &l) in y.labels().iter().enumerate() {
        by_class[l].push(i);
    }
    if let Some((class, members)) = by_class.iter().enumerate().find(|(_, m)| m.len() < required) {
        return Err(Error::InsufficientSamples {
            class,
            available: members.len(),
            required,
        });
    }

    let mut rng = rng::seeded(seed, rng::PARTITION_STREAM);
    let mut subsets = vec![Vec::with_capacity(per_class * y.num_classes()); k];
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for (subset, chunk) in subsets.iter_mut().zip(members[..required].chunks(per_class)) {
            subset.extend_from_slice(chunk);
        }
    }
    subsets.iter_mut().for_each(|s| s.sort_unstable());
    Ok(Partition { subsets, seed })
}
