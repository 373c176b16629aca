//! Softmax likelihood `p(y_i | f_i) = exp(f_i[y_i]) / Σ_c exp(f_i[c])` and
//! its derivatives. Latents are `n × C` matrices, one row per sample.

use nalgebra::DMatrix;

use crate::dataset::LabelVector;

/// Max-subtracted softmax.
pub fn softmax(f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    softmax_into(f, &mut out);
    out
}

pub(crate) fn softmax_into(f: &[f64], out: &mut [f64]) {
    let max = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &v) in out.iter_mut().zip(f) {
        *o = (v - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

pub fn log_sum_exp(f: &[f64]) -> f64 {
    let max = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + f.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

fn row(f: &DMatrix<f64>, i: usize, buf: &mut Vec<f64>) {
    buf.clear();
    buf.extend(f.row(i).iter());
}

/// `log p(y | f) = Σ_i (f[i, y_i] − logsumexp(f[i, ·]))`.
pub fn log_likelihood(f: &DMatrix<f64>, y: &LabelVector) -> f64 {
    let mut buf = Vec::with_capacity(f.ncols());
    let mut total = 0.0;
    for (i, &label) in y.labels().iter().enumerate() {
        row(f, i, &mut buf);
        total += buf[label] - log_sum_exp(&buf);
    }
    total
}

/// Row-wise softmax probabilities `π`.
pub fn class_probabilities(f: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, c) = f.shape();
    let mut pi = DMatrix::zeros(n, c);
    let mut buf = Vec::with_capacity(c);
    let mut out = vec![0.0; c];
    for i in 0..n {
        row(f, i, &mut buf);
        softmax_into(&buf, &mut out);
        for (k, &p) in out.iter().enumerate() {
            pi[(i, k)] = p;
        }
    }
    pi
}

/// One-hot targets.
pub fn targets(y: &LabelVector) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(y.len(), y.num_classes());
    for (i, &l) in y.labels().iter().enumerate() {
        t[(i, l)] = 1.0;
    }
    t
}

/// `∇_f log p(y | f) = targets − π`. Every row sums to zero.
pub fn likelihood_gradient(f: &DMatrix<f64>, y: &LabelVector) -> DMatrix<f64> {
    targets(y) - class_probabilities(f)
}

/// Negative Hessian of `log p(y_i | f_i)` for one sample: `diag(π) − ππᵀ`.
/// Independent of the label.
pub fn negative_hessian(f_row: &[f64]) -> DMatrix<f64> {
    let pi = softmax(f_row);
    let c = pi.len();
    DMatrix::from_fn(c, c, |a, b| if a == b { pi[a] } else { 0.0 } - pi[a] * pi[b])
}
