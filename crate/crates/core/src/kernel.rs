//! Isotropic squared-exponential kernel and Gram matrices.
//!
//! `k(x, x') = σ_f² · exp(−‖x − x'‖² / (2ℓ²))`, zero prior mean.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

/// Initial jitter relative to the signal variance.
pub const DEFAULT_RELATIVE_JITTER: f64 = 1e-6;
/// Largest jitter (relative to the signal variance) tried before giving up.
pub const MAX_RELATIVE_JITTER: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub signal_variance: f64,
    pub length_scale: f64,
    /// Added to the Gram diagonal.
    pub jitter: f64,
}

impl KernelSpec {
    /// Spec with the default jitter of `1e-6 · signal_variance`.
    pub fn new(signal_variance: f64, length_scale: f64) -> Result<Self> {
        Self::with_jitter(signal_variance, length_scale, DEFAULT_RELATIVE_JITTER * signal_variance)
    }

    pub fn with_jitter(signal_variance: f64, length_scale: f64, jitter: f64) -> Result<Self> {
        let spec = Self {
            signal_variance,
            length_scale,
            jitter,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "signal variance must be positive, got {}",
                self.signal_variance
            )));
        }
        if !(self.length_scale.is_finite() && self.length_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "length scale must be positive, got {}",
                self.length_scale
            )));
        }
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "jitter must be non-negative, got {}",
                self.jitter
            )));
        }
        Ok(())
    }

    /// The GP prior mean, identically zero.
    pub fn prior_mean(&self) -> f64 {
        0.0
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        self.signal_variance * (-sq / (2.0 * self.length_scale * self.length_scale)).exp()
    }
}

pub fn kernel_eval(a: &[f64], b: &[f64], spec: &KernelSpec) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "kernel arguments",
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(spec.eval_unchecked(a, b))
}

/// `K_θ + ε·I` together with its Cholesky factor. `spec.jitter` holds the
/// jitter that was actually needed.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    matrix: DMatrix<f64>,
    cholesky: Cholesky<f64, Dyn>,
    spec: KernelSpec,
}

impl GramMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.cholesky
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }
}

fn kernel_matrix(a: &FeatureMatrix, b: &FeatureMatrix, spec: &KernelSpec) -> DMatrix<f64> {
    let (n, m) = (a.rows(), b.rows());
    let mut values = vec![0.0; n * m];
    values
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(i, row)| {
            let ai = a.row(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = spec.eval_unchecked(ai, b.row(j));
            }
        });
    DMatrix::from_row_slice(n, m, &values)
}

/// Builds the jittered Gram matrix over the rows of `x`. Starts from
/// `spec.jitter` and escalates ×10 up to `1e-2 · σ_f²` until Cholesky
/// succeeds.
pub fn gram(x: &FeatureMatrix, spec: &KernelSpec) -> Result<GramMatrix> {
    spec.validate()?;
    let base = kernel_matrix(x, x, spec);
    let floor = DEFAULT_RELATIVE_JITTER * spec.signal_variance;
    let ceiling = MAX_RELATIVE_JITTER * spec.signal_variance * (1.0 + 1e-9);
    let mut jitter = spec.jitter;
    loop {
        let mut matrix = base.clone();
        for i in 0..matrix.nrows() {
            matrix[(i, i)] += jitter;
        }
        if let Some(cholesky) = Cholesky::new(matrix.clone()) {
            return Ok(GramMatrix {
                matrix,
                cholesky,
                spec: KernelSpec { jitter, ..*spec },
            });
        }
        let next = if jitter < floor { floor } else { jitter * 10.0 };
        if next > ceiling {
            return Err(Error::Factorization { jitter });
        }
        jitter = next;
    }
}

/// `n_test × n_train` matrix of kernel values; no jitter.
pub fn cross_gram(train: &FeatureMatrix, test: &FeatureMatrix, spec: &KernelSpec) -> Result<DMatrix<f64>> {
    if train.cols() != test.cols() {
        return Err(Error::DimensionMismatch {
            context: "cross Gram inputs",
            expected: train.cols(),
            found: test.cols(),
        });
    }
    Ok(kernel_matrix(test, train, spec))
}
