#![allow(dead_code)]

use hybridtest::linalg::Matrix;
use hybridtest::model::Dataset;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Matrix<f64> {
    let data = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_row_major(n, p, data).unwrap()
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Linear data `y = xᵀβ + σ ε`.
pub fn linear_data(seed: u64, n: usize, beta: &[f64], sigma: f64) -> Dataset<f64> {
    let mut r = rng(seed);
    let x = normal_matrix(&mut r, n, beta.len());
    let y = x.row_iter().map(|row| dot(row, beta) + sigma * r.sample::<f64, _>(StandardNormal)).collect();
    Dataset::new(x, y).unwrap()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Least squares through the normal equations.
pub fn ols(features: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let d = features[0].len();
    let mut xtx = vec![vec![0.0; d]; d];
    let mut xty = vec![0.0; d];
    for (f, &yi) in features.iter().zip(y) {
        for a in 0..d {
            xty[a] += f[a] * yi;
            for b in 0..d {
                xtx[a][b] += f[a] * f[b];
            }
        }
    }
    gauss_solve(xtx, xty)
}

/// Column standardization with the n − 1 divisor, written out directly.
pub fn standardize(x: &Matrix<f64>) -> Vec<Vec<f64>> {
    let (n, p) = (x.rows(), x.cols());
    let mut out = vec![vec![0.0; p]; n];
    for j in 0..p {
        let mean = (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64;
        let sd = ((0..n).map(|i| (x[(i, j)] - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        for i in 0..n {
            out[i][j] = (x[(i, j)] - mean) / sd;
        }
    }
    out
}

/// χ²₁ CDF by midpoint integration of the density after `t = u²`.
pub fn chi2_1_cdf_numeric(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let top = t.sqrt();
    let steps = 4000;
    let du = top / steps as f64;
    let c = (2.0 / std::f64::consts::PI).sqrt();
    (0..steps).map(|k| {
        let u = (k as f64 + 0.5) * du;
        c * (-u * u / 2.0).exp() * du
    }).sum()
}

/// `V1` by the literal double sum over `j ≠ k`.
pub fn naive_v1(r: &[f64], x: &Matrix<f64>, h: f64) -> f64 {
    let (n, p) = (x.rows(), x.cols());
    let mut total = 0.0;
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let mut kern = 1.0;
            for l in 0..p {
                let u = (x[(j, l)] - x[(k, l)]) / h;
                kern *= (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
            }
            total += r[j] * r[k] * kern / h.powi(p as i32);
        }
    }
    total / (n * (n - 1)) as f64
}

/// `M̂ₙ` by explicit loops over `j`, `k`, `l`.
pub fn naive_target(x: &Matrix<f64>, r: &[f64]) -> Vec<Vec<Complex64>> {
    let (n, p) = (x.rows(), x.cols());
    let means: Vec<f64> = (0..p).map(|a| (0..n).map(|i| x[(i, a)]).sum::<f64>() / n as f64).collect();
    let mut m = vec![vec![Complex64::new(0.0, 0.0); p]; p];
    for &t in r {
        for a in 0..p {
            for b in 0..p {
                let mut ma = Complex64::new(0.0, 0.0);
                let mut mb = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    ma += (x[(k, a)] - means[a]) * Complex64::from_polar(1.0, t * r[k]);
                }
                for l in 0..n {
                    mb += (x[(l, b)] - means[b]) * Complex64::from_polar(1.0, t * r[l]);
                }
                m[a][b] += (ma / n as f64) * (mb / n as f64).conj() / n as f64;
            }
        }
    }
    m
}
