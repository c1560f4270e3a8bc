//! Independent reference implementations used as test oracles. None of them
//! share code with the library beyond plain `Vec<f64>` data.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller, independent of rand_distr.
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Mean of the cumulative accuracies of steps 2..K.
pub fn brute_avg_acc(cumulative: &[f64]) -> f64 {
    let k = cumulative.len();
    let mut total = 0.0;
    let mut count = 0;
    for step in 1..k {
        total += cumulative[step];
        count += 1;
    }
    total / count as f64
}

/// Weighted forgetting: subset 0 weighted by `b`, every later subset by
/// `(1 - b) / (K - 1)`; each subset contributes best-minus-final accuracy.
pub fn brute_forgetting(rows: &[Vec<f64>], b_num: u64, b_den: u64) -> f64 {
    let k = rows.len();
    let b = b_num as f64 / b_den as f64;
    let mut f = 0.0;
    for i in 0..k {
        let mut best = f64::MIN;
        for row in rows.iter().skip(i) {
            if row[i] > best {
                best = row[i];
            }
        }
        let gap = best - rows[k - 1][i];
        let w = if i == 0 { b } else { (1.0 - b) / (k as f64 - 1.0) };
        f += w * gap;
    }
    f
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                for c in col..=n {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = m[r][n];
        for c in r + 1..n {
            s -= m[r][c] * x[c];
        }
        x[r] = s / m[r][r];
    }
    x
}

/// Inverse by solving against each unit vector.
pub fn gauss_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let e: Vec<f64> = (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            gauss_solve(a, &e)
        })
        .collect();
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

/// Least-squares coefficients from the normal equations `XᵀX β = Xᵀy`.
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..p {
            xty[i] += row[i] * yi;
            for j in 0..p {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    gauss_solve(&xtx, &xty)
}

pub fn residual_ss(x: &[Vec<f64>], y: &[f64]) -> f64 {
    let beta = normal_equations(x, y);
    x.iter()
        .zip(y)
        .map(|(row, &yi)| {
            let fit: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            (yi - fit).powi(2)
        })
        .sum()
}

/// Two-sided Student t p-value `P(|T| > |t|)` for an integer number of
/// degrees of freedom, from the closed-form finite series of the t CDF.
pub fn t_two_sided_p(t: f64, df: usize) -> f64 {
    assert!(df >= 1);
    let nu = df as f64;
    let theta = (t.abs() / nu.sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let c2 = c * c;
    // A(t | nu) = P(|T| <= |t|)
    let a = if df % 2 == 1 {
        let mut sum = 0.0;
        if df > 1 {
            let mut term = c;
            sum = term;
            let mut k = 1;
            while 2 * k + 1 <= df - 2 {
                term *= c2 * (2 * k) as f64 / (2 * k + 1) as f64;
                sum += term;
                k += 1;
            }
        }
        2.0 / PI * (theta + s * sum)
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1;
        while 2 * k <= df - 2 {
            term *= c2 * (2 * k - 1) as f64 / (2 * k) as f64;
            sum += term;
            k += 1;
        }
        s * sum
    };
    (1.0 - a).clamp(0.0, 1.0)
}

/// Batch LDA with a shared covariance `(1 - ε) S / n + ε I`, where `S` is the
/// pooled within-class scatter computed in two passes. Returns the weight
/// rows and biases of the classes in ascending label order.
pub fn batch_lda(rows: &[Vec<f64>], labels: &[u32], shrinkage: f64) -> (Vec<u32>, Vec<Vec<f64>>, Vec<f64>) {
    let d = rows[0].len();
    let mut classes: Vec<u32> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let mut means = vec![vec![0.0; d]; classes.len()];
    let mut counts = vec![0usize; classes.len()];
    for (x, y) in rows.iter().zip(labels) {
        let c = classes.binary_search(y).unwrap();
        counts[c] += 1;
        for j in 0..d {
            means[c][j] += x[j];
        }
    }
    for (m, &n) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= n as f64);
    }
    let mut cov = vec![vec![0.0; d]; d];
    for (x, y) in rows.iter().zip(labels) {
        let m = &means[classes.binary_search(y).unwrap()];
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (x[i] - m[i]) * (x[j] - m[j]);
            }
        }
    }
    let n = rows.len() as f64;
    for (i, row) in cov.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (1.0 - shrinkage) * *v / n + if i == j { shrinkage } else { 0.0 };
        }
    }
    let prec = gauss_inverse(&cov);
    let mut weights = Vec::new();
    let mut bias = Vec::new();
    for m in &means {
        let w: Vec<f64> = (0..d).map(|i| (0..d).map(|j| prec[i][j] * m[j]).sum()).collect();
        bias.push(-0.5 * m.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>());
        weights.push(w);
    }
    (classes, weights, bias)
}

/// Number of eigenvalues of the symmetric matrix `a` below `sigma`, by
/// Sylvester's law of inertia on an LDLᵀ factorization of `a - σI`.
pub fn eigen_count_below(a: &[Vec<f64>], sigma: f64) -> usize {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= sigma;
    }
    let mut negatives = 0;
    for k in 0..n {
        let mut piv = m[k][k];
        if piv == 0.0 {
            piv = -1e-300;
        }
        if piv < 0.0 {
            negatives += 1;
        }
        for i in k + 1..n {
            let f = m[i][k] / piv;
            for j in k + 1..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    negatives
}

/// Smallest eigenvalue of a symmetric matrix by bisection on the inertia count.
pub fn min_eigenvalue_bisect(a: &[Vec<f64>]) -> f64 {
    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, row) in a.iter().enumerate() {
        let r: f64 = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| v.abs())
            .sum();
        lo = lo.min(row[i] - r);
        hi = hi.max(row[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eigen_count_below(a, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Random accuracy matrix with `k` steps: lower-triangular rows plus
/// cumulative accuracies, entries quantized like real test-set accuracies.
pub fn random_accuracy(rng: &mut ChaCha8Rng, k: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let denom = rng.random_range(10..500) as f64;
    let q = |rng: &mut ChaCha8Rng| (rng.random_range(0..=denom as u32) as f64) / denom;
    let rows: Vec<Vec<f64>> = (0..k).map(|s| (0..=s).map(|_| q(rng)).collect()).collect();
    let cumulative = (0..k).map(|_| q(rng)).collect();
    (rows, cumulative)
}
