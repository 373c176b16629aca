use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::likelihood::softmax_into;
use super::model::ExpertModel;
use crate::dataset::FeatureMatrix;
use crate::error::Result;
use crate::kernel::cross_gram;
use crate::rng;

/// Smallest variance ever reported or inverted.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Default number of Monte Carlo draws for the predictive density.
pub const DEFAULT_SAMPLES: usize = 1000;

/// Per test point, per class latent mean and variance (`n_test × C`).
#[derive(Clone, Debug, PartialEq)]
pub struct LatentPrediction {
    pub mean: DMatrix<f64>,
    pub variance: DMatrix<f64>,
}

impl LatentPrediction {
    pub fn num_points(&self) -> usize {
        self.mean.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.mean.ncols()
    }
}

/// Per test point class probabilities (`n_test × C`), with the Monte Carlo
/// standard error of each entry (zero where the result is exact).
#[derive(Clone, Debug, PartialEq)]
pub struct ClassPosterior {
    pub probs: DMatrix<f64>,
    pub std_error: DMatrix<f64>,
}

impl ClassPosterior {
    /// Argmax per point; the lowest class index wins exact ties.
    pub fn argmax(&self) -> Vec<usize> {
        (0..self.probs.nrows())
            .map(|i| {
                let row = self.probs.row(i);
                let mut best = 0;
                for (c, &p) in row.iter().enumerate().skip(1) {
                    if p > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}

/// Predictive latent mean `k(x̃, X) ∇log p(y|f̂)` and variance
/// `k(x̃, x̃) − k(x̃, X) (K + W⁻¹)⁻¹ k(X, x̃)` per class.
///
/// With `(K + W⁻¹)⁻¹ = E − E R (Σ_c E_c)⁻¹ Rᵀ E` the class-`c` variance is
/// `σ_f² − kᵀ E_c k + ‖M⁻¹ E_c k‖²`.
pub fn latent_predict(model: &ExpertModel, x_test: &FeatureMatrix) -> Result<LatentPrediction> {
    let ks = cross_gram(model.x(), x_test, model.spec())?;
    let mean = &ks * model.grad();
    let kst = ks.transpose();
    let prior = model.spec().signal_variance;
    let factors = model.factors();
    let m = factors.m();
    let columns: Vec<Vec<f64>> = (0..model.num_classes())
        .into_par_iter()
        .map(|class| {
            let v = factors.e(class) * &kst;
            let w = m.l_dirty().solve_lower_triangular(&v).expect("M is a Cholesky factor");
            (0..kst.ncols())
                .map(|t| {
                    let var = prior - kst.column(t).dot(&v.column(t)) + w.column(t).norm_squared();
                    var.max(VARIANCE_FLOOR)
                })
                .collect()
        })
        .collect();
    let variance = DMatrix::from_fn(x_test.rows(), model.num_classes(), |t, c| columns[c][t]);
    Ok(LatentPrediction { mean, variance })
}

/// Monte Carlo estimate of `∫ softmax(f̃) N(f̃; μ, diag σ²) df̃` per test
/// point, treating the class latents as independent. Point `t` draws from
/// its own stream derived from `(seed, t)`. Points with all-zero variance
/// get `softmax(μ)` exactly.
pub fn predictive_density(pred: &LatentPrediction, num_samples: usize, seed: u64) -> ClassPosterior {
    let (n, c) = pred.mean.shape();
    let samples = num_samples.max(1);
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|t| {
            let mu: Vec<f64> = pred.mean.row(t).iter().copied().collect();
            let sd: Vec<f64> = pred.variance.row(t).iter().map(|v| v.max(0.0).sqrt()).collect();
            let mut probs = vec![0.0; c];
            if sd.iter().all(|&s| s == 0.0) {
                softmax_into(&mu, &mut probs);
                return (probs, vec![0.0; c]);
            }
            let mut rng = rng::seeded(seed, rng::PREDICTIVE_STREAM + t as u64);
            let mut draw = vec![0.0; c];
            let mut p = vec![0.0; c];
            let mut sum_sq = vec![0.0; c];
            for _ in 0..samples {
                for ((d, m), s) in draw.iter_mut().zip(&mu).zip(&sd) {
                    let z: f64 = rng.sample(StandardNormal);
                    *d = m + s * z;
                }
                softmax_into(&draw, &mut p);
                for k in 0..c {
                    probs[k] += p[k];
                    sum_sq[k] += p[k] * p[k];
                }
            }
            let s = samples as f64;
            let mut se = vec![0.0; c];
            for k in 0..c {
                probs[k] /= s;
                if samples > 1 {
                    let var = ((sum_sq[k] / s - probs[k] * probs[k]) * s / (s - 1.0)).max(0.0);
                    se[k] = (var / s).sqrt();
                }
            }
            (probs, se)
        })
        .collect();
    ClassPosterior {
        probs: DMatrix::from_fn(n, c, |t, k| rows[t].0[k]),
        std_error: DMatrix::from_fn(n, c, |t, k| rows[t].1[k]),
    }
}
