//! Newton mode finding for the stacked `n·C` latent with one shared Gram
//! matrix per class.
//!
//! The negative Hessian of the likelihood is `W = D − ΠΠᵀ` with
//! `D = diag(π)` and `Π` stacking `diag(π_c)`. The iteration works in the
//! `f = K a` parametrization so the objective `−½ aᵀf + log p(y|f)` never
//! needs `K⁻¹`, and it only factorizes the `n × n` matrices
//! `B_c = I + D_c½ K D_c½` and `M Mᵀ = Σ_c E_c`, where
//! `E_c = D_c½ B_c⁻¹ D_c½`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::likelihood::{class_probabilities, log_likelihood, targets};
use crate::dataset::LabelVector;
use crate::error::{Error, Result};
use crate::kernel::GramMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Converged once an accepted step improves the objective by less.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 100,
            max_halvings: 20,
        }
    }
}

/// Quantities derived from `π` at a latent point, sufficient for the Newton
/// step, the log-determinant and the predictive variance.
#[derive(Clone, Debug)]
pub struct LaplaceFactors {
    pub(crate) e: Vec<DMatrix<f64>>,
    pub(crate) m: Cholesky<f64, Dyn>,
    /// `½ log |I + K W|`.
    pub(crate) half_log_det: f64,
}

impl LaplaceFactors {
    pub fn half_log_det(&self) -> f64 {
        self.half_log_det
    }

    /// `E_c = D_c½ (I + D_c½ K D_c½)⁻¹ D_c½`.
    pub fn e(&self, class: usize) -> &DMatrix<f64> {
        &self.e[class]
    }

    /// Cholesky factor of `Σ_c E_c`.
    pub fn m(&self) -> &Cholesky<f64, Dyn> {
        &self.m
    }
}

pub(crate) fn factors_at(k: &DMatrix<f64>, pi: &DMatrix<f64>) -> Result<LaplaceFactors> {
    let (n, c) = pi.shape();
    let mut e = Vec::with_capacity(c);
    let mut e_sum = DMatrix::zeros(n, n);
    let mut half_log_det = 0.0;
    for class in 0..c {
        let sd: DVector<f64> = pi.column(class).map(f64::sqrt);
        let mut b = k.component_mul(&(&sd * sd.transpose()));
        for i in 0..n {
            b[(i, i)] += 1.0;
        }
        let chol = Cholesky::new(b).ok_or(Error::Factorization { jitter: 0.0 })?;
        half_log_det += chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        // E_c = Xᵀ X with X = L⁻¹ D½
        let mut x = lower_triangular_inverse(chol.l_dirty());
        for (j, mut col) in x.column_iter_mut().enumerate() {
            col *= sd[j];
        }
        let ec = x.transpose() * &x;
        e_sum += &ec;
        e.push(ec);
    }
    let m = Cholesky::new(e_sum).ok_or(Error::Factorization { jitter: 0.0 })?;
    half_log_det += m.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(LaplaceFactors { e, m, half_log_det })
}

/// Inverse of a lower-triangular matrix by forward substitution, skipping
/// the structural zeros of the identity right-hand side.
fn lower_triangular_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    // Column i of `lt` is row i of `l`, contiguous.
    let lt = l.transpose();
    let rows = lt.as_slice();
    let mut inv = DMatrix::zeros(n, n);
    for (j, col) in inv.as_mut_slice().chunks_mut(n).enumerate() {
        col[j] = 1.0 / l[(j, j)];
        for i in j + 1..n {
            let row = &rows[i * n..i * n + n];
            let acc: f64 = row[j..i].iter().zip(&col[j..i]).map(|(a, b)| a * b).sum();
            col[i] = -acc / row[i];
        }
    }
    inv
}

/// Result of Newton mode finding.
#[derive(Clone, Debug)]
pub struct LaplaceMode {
    /// `f̂`, `n × C`.
    pub mode: DMatrix<f64>,
    /// `∇ log p(y | f̂) = targets − π̂`.
    pub grad: DMatrix<f64>,
    pub factors: LaplaceFactors,
    /// Laplace-approximate `log q(y | X, θ)`.
    pub log_marginal: f64,
    /// `log p(y|f̂) − ½ Σ_c f̂_cᵀ K⁻¹ f̂_c` at the mode.
    pub objective: f64,
    pub iterations: usize,
    /// Objective at the start and after every accepted step.
    pub trace: Vec<f64>,
}

fn objective(a: &DMatrix<f64>, f: &DMatrix<f64>, y: &LabelVector) -> f64 {
    -0.5 * a.dot(f) + log_likelihood(f, y)
}

/// One full Newton proposal for `a`, given `f = K a` and the factors at `f`.
fn newton_proposal(
    k: &DMatrix<f64>,
    f: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    t: &DMatrix<f64>,
    factors: &LaplaceFactors,
) -> DMatrix<f64> {
    let (n, c) = f.shape();
    // b = W f + (t − π)
    let mut b = DMatrix::zeros(n, c);
    for i in 0..n {
        let s: f64 = (0..c).map(|j| pi[(i, j)] * f[(i, j)]).sum();
        for j in 0..c {
            b[(i, j)] = pi[(i, j)] * (f[(i, j)] - s) + t[(i, j)] - pi[(i, j)];
        }
    }
    let kb = k * &b;
    let mut corr = DMatrix::zeros(n, c);
    let mut r = DVector::zeros(n);
    for class in 0..c {
        let col = &factors.e[class] * kb.column(class);
        r += &col;
        corr.set_column(class, &col);
    }
    let s = factors.m.solve(&r);
    let mut a = b - corr;
    for class in 0..c {
        let add = &factors.e[class] * &s;
        let mut col = a.column_mut(class);
        col += add;
    }
    a
}

pub fn find_mode(k: &GramMatrix, y: &LabelVector) -> Result<LaplaceMode> {
    find_mode_with(k.matrix(), y, &NewtonOptions::default())
}

/// Newton iteration from `f = 0` with step-halving line search on the exact
/// objective.
pub fn find_mode_with(k: &DMatrix<f64>, y: &LabelVector, opts: &NewtonOptions) -> Result<LaplaceMode> {
    let n = y.len();
    let c = y.num_classes();
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "Gram matrix vs labels",
            expected: n,
            found: k.nrows(),
        });
    }
    let t = targets(y);
    let mut a = DMatrix::zeros(n, c);
    let mut f = DMatrix::zeros(n, c);
    let mut obj = objective(&a, &f, y);
    let mut trace = vec![obj];
    let mut last_delta = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let pi = class_probabilities(&f);
        let factors = factors_at(k, &pi)?;
        let proposal = newton_proposal(k, &f, &pi, &t, &factors);
        let direction = &proposal - &a;

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let a_new = &a + &direction * step;
            let f_new = k * &a_new;
            let obj_new = objective(&a_new, &f_new, y);
            if obj_new >= obj {
                accepted = Some((a_new, f_new, obj_new));
                break;
            }
            step *= 0.5;
        }
        let Some((a_new, f_new, obj_new)) = accepted else {
            // No representable improvement left along the Newton direction.
            converged = true;
            break;
        };
        last_delta = obj_new - obj;
        a = a_new;
        f = f_new;
        obj = obj_new;
        trace.push(obj);
        if last_delta < opts.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations,
            last_delta,
        });
    }

    let pi = class_probabilities(&f);
    let factors = factors_at(k, &pi)?;
    let grad = t - pi;
    let log_marginal = obj - factors.half_log_det;
    Ok(LaplaceMode {
        mode: f,
        grad,
        factors,
        log_marginal,
        objective: obj,
        iterations,
        trace,
    })
}

/// `‖f̂ − K ∇log p(y|f̂)‖∞`, zero at an exact mode.
pub fn stationarity_residual(k: &DMatrix<f64>, mode: &DMatrix<f64>, grad: &DMatrix<f64>) -> f64 {
    (mode - k * grad).amax()
}
