//! Independent reference computations for the test suites. Nothing here
//! calls into the library's numerical paths: every oracle works on dense
//! matrices, brute-force optimization or quadrature.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Naive softmax without max-subtraction safeguards beyond what the inputs
/// need; used only on moderate latents.
pub fn softmax_naive(f: &[f64]) -> Vec<f64> {
    let m = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = f.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Squared-exponential kernel by explicit double loop.
pub fn se_kernel(a: &[f64], b: &[f64], signal_variance: f64, length_scale: f64) -> f64 {
    let mut d2 = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        d2 += d * d;
    }
    signal_variance * (-d2 / (2.0 * length_scale * length_scale)).exp()
}

pub fn pairwise(rows_a: &[Vec<f64>], rows_b: &[Vec<f64>], sv: f64, ls: f64) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(rows_a.len(), rows_b.len());
    for i in 0..rows_a.len() {
        for j in 0..rows_b.len() {
            k[(i, j)] = se_kernel(&rows_a[i], &rows_b[j], sv, ls);
        }
    }
    k
}

/// Exact unnormalized log posterior `log p(y|f) − ½ Σ_c f_cᵀ K⁻¹ f_c` with
/// `f` stored class-major (`f[c·n + i]`).
pub fn log_posterior(f: &[f64], k_inv: &DMatrix<f64>, y: &[usize], c: usize) -> f64 {
    let n = y.len();
    let mut lp = 0.0;
    for i in 0..n {
        let row: Vec<f64> = (0..c).map(|j| f[j * n + i]).collect();
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        lp += row[y[i]] - lse;
    }
    for j in 0..c {
        let fc = DVector::from_column_slice(&f[j * n..(j + 1) * n]);
        lp -= 0.5 * fc.dot(&(k_inv * &fc));
    }
    lp
}

/// Nelder–Mead maximization with restarts until the simplex collapses to
/// `tol` in both position and value.
pub fn nelder_mead_max(obj: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, tol: f64) -> Vec<f64> {
    let g = |x: &[f64]| -obj(x);
    let d = x0.len();
    let mut best = x0.to_vec();
    for restart in 0..50 {
        let s = step / (1.0 + restart as f64);
        let mut simplex: Vec<Vec<f64>> = vec![best.clone()];
        for i in 0..d {
            let mut p = best.clone();
            p[i] += s;
            simplex.push(p);
        }
        let mut vals: Vec<f64> = simplex.iter().map(|p| g(p)).collect();
        for _ in 0..200_000 {
            let mut order: Vec<usize> = (0..=d).collect();
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            vals = order.iter().map(|&i| vals[i]).collect();
            let spread = (vals[d] - vals[0]).abs();
            let size = simplex
                .iter()
                .skip(1)
                .map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread < tol && size < tol {
                break;
            }
            let mut centroid = vec![0.0; d];
            for p in &simplex[..d] {
                for (c, v) in centroid.iter_mut().zip(p) {
                    *c += v / d as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[d]).map(|(c, w)| c + t * (w - c)).collect()
            };
            let xr = along(-1.0);
            let fr = g(&xr);
            if fr < vals[0] {
                let xe = along(-2.0);
                let fe = g(&xe);
                if fe < fr {
                    simplex[d] = xe;
                    vals[d] = fe;
                } else {
                    simplex[d] = xr;
                    vals[d] = fr;
                }
            } else if fr < vals[d - 1] {
                simplex[d] = xr;
                vals[d] = fr;
            } else {
                let xc = if fr < vals[d] { along(-0.5) } else { along(0.5) };
                let fc = g(&xc);
                if fc < vals[d].min(fr) {
                    simplex[d] = xc;
                    vals[d] = fc;
                } else {
                    for i in 1..=d {
                        let p: Vec<f64> = simplex[i].iter().zip(&simplex[0]).map(|(a, b)| b + 0.5 * (a - b)).collect();
                        vals[i] = g(&p);
                        simplex[i] = p;
                    }
                }
            }
        }
        let (i, _) = vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let moved = simplex[i].iter().zip(&best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        best = simplex[i].clone();
        if restart > 0 && moved < tol {
            break;
        }
    }
    best
}

/// Gauss–Hermite nodes and weights for `∫ e^{−x²} g(x) dx`, by Newton
/// iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z: f64 = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2 - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `E[g(d)]` for `d ~ N(mean, var)` by Gauss–Hermite quadrature.
pub fn gaussian_expectation(g: impl Fn(f64) -> f64, mean: f64, var: f64, nodes: usize) -> f64 {
    let (x, w) = gauss_hermite(nodes);
    let s = (2.0 * var).sqrt();
    x.iter().zip(&w).map(|(xi, wi)| wi * g(mean + s * xi)).sum::<f64>() / std::f64::consts::PI.sqrt()
}

/// Two-class predictive probabilities from independent latents: class 0
/// wins with probability `E[σ(f₀ − f₁)]`, a 1-D integral over the
/// difference.
pub fn binary_predictive(mu: [f64; 2], var: [f64; 2]) -> [f64; 2] {
    let p0 = gaussian_expectation(|d| 1.0 / (1.0 + (-d).exp()), mu[0] - mu[1], var[0] + var[1], 80);
    [p0, 1.0 - p0]
}

/// Negative Hessian of the softmax log-likelihood for the stacked
/// class-major latent, built entry by entry.
pub fn dense_w(pi: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, c) = pi.shape();
    let mut w = DMatrix::zeros(n * c, n * c);
    for i in 0..n {
        for a in 0..c {
            for b in 0..c {
                let v = if a == b { pi[(i, a)] } else { 0.0 } - pi[(i, a)] * pi[(i, b)];
                w[(a * n + i, b * n + i)] = v;
            }
        }
    }
    w
}

pub fn block_diag(k: &DMatrix<f64>, c: usize) -> DMatrix<f64> {
    let n = k.nrows();
    let mut big = DMatrix::zeros(n * c, n * c);
    for j in 0..c {
        big.view_mut((j * n, j * n), (n, n)).copy_from(k);
    }
    big
}

/// `½ log det(I + K W)` by LU on the dense `nC × nC` matrix.
pub fn dense_half_log_det(k: &DMatrix<f64>, pi: &DMatrix<f64>) -> f64 {
    let c = pi.ncols();
    let kb = block_diag(k, c);
    let a = DMatrix::identity(kb.nrows(), kb.nrows()) + &kb * dense_w(pi);
    0.5 * a.lu().determinant().ln()
}

/// Predictive latent mean and per-class variance at one test point from
/// the dense formulas: mean `Q*ᵀ (t − π)` and covariance
/// `k** − Q*ᵀ (I + W K)⁻¹ W Q*`, where `Q*` stacks the cross-kernel column
/// per class. The singular `W` is never inverted.
pub fn dense_predict(
    k: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    grad: &DMatrix<f64>,
    k_star: &[f64],
    k_star_star: f64,
) -> (Vec<f64>, Vec<f64>) {
    let (n, c) = pi.shape();
    let kb = block_diag(k, c);
    let w = dense_w(pi);
    let mut q = DMatrix::zeros(n * c, c);
    for j in 0..c {
        for i in 0..n {
            q[(j * n + i, j)] = k_star[i];
        }
    }
    let g = DVector::from_fn(n * c, |r, _| grad[(r % n, r / n)]);
    let mean = q.transpose() * g;
    let a = DMatrix::identity(n * c, n * c) + &w * &kb;
    let inner = a.lu().solve(&(&w * &q)).expect("I + WK is nonsingular");
    let cov = DMatrix::from_diagonal_element(c, c, k_star_star) - q.transpose() * inner;
    (mean.iter().copied().collect(), (0..c).map(|j| cov[(j, j)]).collect())
}

/// Exact evidence `∫ p(y|f) N(f; 0, K) df` for two points and two classes
/// by a tensor Gauss–Hermite grid in whitened coordinates `f_c = L z_c`.
pub fn evidence_n2_c2(k: &DMatrix<f64>, y: [usize; 2], nodes: usize) -> f64 {
    let l = k.clone().cholesky().expect("K is positive definite").l();
    let (x, w) = gauss_hermite(nodes);
    let s2 = std::f64::consts::SQRT_2;
    let lik = |f0: [f64; 2], f1: [f64; 2]| -> f64 {
        // f0, f1: latents of class 0 and class 1 at the two points
        let mut p = 1.0;
        for i in 0..2 {
            let d = if y[i] == 0 { f0[i] - f1[i] } else { f1[i] - f0[i] };
            p *= 1.0 / (1.0 + (-d).exp());
        }
        p
    };
    let mut total = 0.0;
    for (a, wa) in x.iter().zip(&w) {
        for (b, wb) in x.iter().zip(&w) {
            let f0 = [l[(0, 0)] * s2 * a, l[(1, 0)] * s2 * a + l[(1, 1)] * s2 * b];
            for (cc, wc) in x.iter().zip(&w) {
                for (dd, wd) in x.iter().zip(&w) {
                    let f1 = [l[(0, 0)] * s2 * cc, l[(1, 0)] * s2 * cc + l[(1, 1)] * s2 * dd];
                    total += wa * wb * wc * wd * lik(f0, f1);
                }
            }
        }
    }
    total / (std::f64::consts::PI * std::f64::consts::PI)
}

/// Nearest class centroid, centroids estimated on the training rows.
pub fn nearest_centroid(train: &[Vec<f64>], y: &[usize], c: usize, test: &[Vec<f64>]) -> Vec<usize> {
    let d = train[0].len();
    let mut sums = vec![vec![0.0; d]; c];
    let mut counts = vec![0usize; c];
    for (row, &label) in train.iter().zip(y) {
        counts[label] += 1;
        for (s, v) in sums[label].iter_mut().zip(row) {
            *s += v;
        }
    }
    let centroids: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &n)| s.into_iter().map(|v| v / n.max(1) as f64).collect())
        .collect();
    test.iter()
        .map(|row| {
            let mut best = (0, f64::INFINITY);
            for (k, cen) in centroids.iter().enumerate() {
                let d2: f64 = row.iter().zip(cen).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 < best.1 {
                    best = (k, d2);
                }
            }
            best.0
        })
        .collect()
}

/// Flat product-of-experts over `(mean, variance)` children in a simple
/// left fold.
pub fn flat_poe(children: &[(f64, f64)]) -> (f64, f64) {
    let precision: f64 = children.iter().map(|(_, v)| 1.0 / v).sum();
    let weighted: f64 = children.iter().map(|(m, v)| m / v).sum();
    (weighted / precision, 1.0 / precision)
}

/// Accuracy and confusion by tallying `(truth, prediction)` pairs in a map.
pub fn tally(predicted: &[usize], truth: &[usize], c: usize) -> (f64, Vec<Vec<usize>>) {
    let mut counts = std::collections::HashMap::new();
    for (&p, &t) in predicted.iter().zip(truth) {
        *counts.entry((t, p)).or_insert(0usize) += 1;
    }
    let confusion = (0..c)
        .map(|i| (0..c).map(|j| counts.get(&(i, j)).copied().unwrap_or(0)).collect())
        .collect();
    let correct: usize = (0..c).map(|i| counts.get(&(i, i)).copied().unwrap_or(0)).sum();
    (correct as f64 / truth.len() as f64, confusion)
}

pub fn rows_of(values: &[f64], cols: usize) -> Vec<Vec<f64>> {
    values.chunks(cols).map(|r| r.to_vec()).collect()
}
