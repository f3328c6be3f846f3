//! Moment component V0, kernel U-statistic V1, the null variance estimator
//! σ̂0², and Zheng's standardized kernel test.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, norm2, Matrix};
use crate::model::{FitResult, ParametricModel};
use crate::scalar::{compensated_sum, CompensatedSum, Scalar};
use crate::special::normal_upper_tail;

/// Default bandwidth multiplier `c_h` in `h = c_h · n^(-1/(p+4))`.
pub const DEFAULT_BANDWIDTH_MULTIPLIER: f64 = 1.5;
/// Default weight constant `c` in `w(x) = c · exp(-‖x‖)`.
pub const DEFAULT_WEIGHT_CONSTANT: f64 = 0.1;

/// Product-Gaussian kernel with bandwidth `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig<T> {
    pub bandwidth: T,
}

impl<T: Scalar> KernelConfig<T> {
    pub fn new(bandwidth: T) -> Result<Self> {
        if !(bandwidth > T::zero()) || !bandwidth.is_finite() {
            return Err(Error::Config(format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Self { bandwidth })
    }

    /// `h = c_h · n^(-1/(p+4))`.
    pub fn from_rule(n: usize, p: usize, multiplier: T) -> Result<Self> {
        if !(multiplier > T::zero()) {
            return Err(Error::Config(format!("bandwidth multiplier must be positive, got {multiplier}")));
        }
        let exponent = -T::one() / T::from_usize_lossy(p + 4);
        Self::new(multiplier * T::from_usize_lossy(n).powf(exponent))
    }

    /// `h^(-p) K((a − b)/h)` with `K(u) = Π (2π)^(-1/2) exp(-uᵢ²/2)`.
    #[inline]
    pub fn scaled_kernel(&self, a: &[T], b: &[T]) -> T {
        let h = self.bandwidth;
        let sq = a.iter().zip(b).fold(T::zero(), |acc, (&u, &v)| {
            let z = (u - v) / h;
            acc + z * z
        });
        let p = a.len() as i32;
        let norm = (T::lit(2.0) * T::PI()).sqrt() * h;
        (-sq / T::lit(2.0)).exp() / norm.powi(p)
    }

    /// `K((a − b)/h)` without the `h^(-p)` factor.
    #[inline]
    pub fn kernel(&self, a: &[T], b: &[T]) -> T {
        self.scaled_kernel(a, b) * self.bandwidth.powi(a.len() as i32)
    }
}

/// Weight `w(x) = c · exp(-‖x‖₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig<T> {
    pub c: T,
}

impl<T: Scalar> WeightConfig<T> {
    pub fn new(c: T) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::Config(format!("weight constant must be positive, got {c}")));
        }
        Ok(Self { c })
    }
}

impl<T: Scalar> Default for WeightConfig<T> {
    fn default() -> Self {
        Self { c: T::lit(DEFAULT_WEIGHT_CONSTANT) }
    }
}

#[inline]
pub fn weight<T: Scalar>(x: &[T], cfg: &WeightConfig<T>) -> T {
    cfg.c * (-norm2(x)).exp()
}

pub fn weights<T: Scalar>(x: &Matrix<T>, cfg: &WeightConfig<T>) -> Vec<T> {
    x.row_iter().map(|r| weight(r, cfg)).collect()
}

/// Centers each column and scales it to unit sample variance (n − 1 divisor).
pub fn standardize_columns<T: Scalar>(x: &Matrix<T>) -> Result<Matrix<T>> {
    let (n, p) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::InvalidData("standardization needs at least two rows".into()));
    }
    let mut out = x.clone();
    for j in 0..p {
        let col = x.column(j);
        let mean = compensated_sum(col.iter().copied()) / T::from_usize_lossy(n);
        let var = compensated_sum(col.iter().map(|&v| (v - mean) * (v - mean))) / T::from_usize_lossy(n - 1);
        if !(var > T::zero()) {
            return Err(Error::InvalidData(format!("covariate column {} is constant", j + 1)));
        }
        let sd = var.sqrt();
        for i in 0..n {
            out[(i, j)] = (x[(i, j)] - mean) / sd;
        }
    }
    Ok(out)
}

/// `V0 = n⁻¹ Σ η̂ⱼ wⱼ`.
pub fn v0<T: Scalar>(residuals: &[T], weights: &[T]) -> T {
    assert_eq!(residuals.len(), weights.len(), "residual and weight lengths differ");
    if residuals.is_empty() {
        return T::zero();
    }
    compensated_sum(residuals.iter().zip(weights).map(|(&r, &w)| r * w)) / T::from_usize_lossy(residuals.len())
}

/// Ordered per-row sums `Σ_{k>j} f(j, k)` reduced with compensation.
fn upper_pair_sum<T: Scalar>(n: usize, f: impl Fn(usize, usize) -> T + Sync) -> T {
    let rows: Vec<T> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut acc = CompensatedSum::new();
            for k in j + 1..n {
                acc.add(f(j, k));
            }
            acc.value()
        })
        .collect();
    compensated_sum(rows)
}

/// `V1 = 1/(n(n−1)) Σ_{j≠k} η̂ⱼ η̂ₖ h^(-p) K((xⱼ − xₖ)/h)`.
pub fn v1<T: Scalar>(residuals: &[T], x: &Matrix<T>, cfg: &KernelConfig<T>) -> T {
    let n = residuals.len();
    assert_eq!(n, x.rows(), "residual count and covariate rows differ");
    assert!(n >= 2, "V1 needs at least two observations");
    let half = upper_pair_sum(n, |j, k| residuals[j] * residuals[k] * cfg.scaled_kernel(x.row(j), x.row(k)));
    T::lit(2.0) * half / (T::from_usize_lossy(n) * T::from_usize_lossy(n - 1))
}

/// Gradient rows `ġ(xⱼ, θ̂)` as an n×d matrix.
pub fn gradient_matrix<T: Scalar>(model: &ParametricModel<T>, x: &Matrix<T>, theta: &[T]) -> Matrix<T> {
    let d = model.d();
    let mut g = Matrix::zeros(x.rows(), d);
    for (i, row) in x.row_iter().enumerate() {
        g.row_mut(i).copy_from_slice(&model.gradient(row, theta));
    }
    g
}

/// `σ̂0² = (n⁻¹Σ η̂ⱼ²) [n⁻¹Σ wⱼ² − bᵀ G⁻¹ b]` with `b = n⁻¹Σ ġⱼ wⱼ` and
/// `G = n⁻¹Σ ġⱼ ġⱼᵀ`. `x` is what the model is evaluated on; `weights` are
/// precomputed.
pub fn sigma0_sq_hat<T: Scalar>(
    fit: &FitResult<T>,
    x: &Matrix<T>,
    model: &ParametricModel<T>,
    weights: &[T],
) -> Result<T> {
    let grads = gradient_matrix(model, x, &fit.theta_hat);
    sigma0_sq_from_parts(&fit.residuals, &grads, weights)
}

pub fn sigma0_sq_from_parts<T: Scalar>(residuals: &[T], grads: &Matrix<T>, weights: &[T]) -> Result<T> {
    let n = residuals.len();
    if grads.rows() != n || weights.len() != n {
        return Err(Error::Contract("residuals, gradients and weights must have equal length".into()));
    }
    let d = grads.cols();
    let nf = T::from_usize_lossy(n);
    let mut gram = Matrix::zeros(d, d);
    let mut b = vec![T::zero(); d];
    for (g, &w) in grads.row_iter().zip(weights) {
        for a in 0..d {
            b[a] = b[a] + g[a] * w;
            for c in 0..=a {
                gram[(a, c)] = gram[(a, c)] + g[a] * g[c];
            }
        }
    }
    for a in 0..d {
        b[a] = b[a] / nf;
        for c in 0..=a {
            gram[(a, c)] = gram[(a, c)] / nf;
            gram[(c, a)] = gram[(a, c)];
        }
    }
    let l = cholesky(&gram, T::epsilon() * T::lit(1e4)).map_err(|e| match e {
        Error::RankDeficient(msg) => Error::RankDeficient(format!(
            "n⁻¹ Σ ġ ġᵀ is not invertible at θ̂ ({msg}); the model gradient must have full rank"
        )),
        other => other,
    })?;
    let solved = cholesky_solve(&l, &b);
    let quad = b.iter().zip(&solved).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
    let mean_w2 = compensated_sum(weights.iter().map(|&w| w * w)) / nf;
    let bracket = (mean_w2 - quad).max(T::zero());
    let mean_r2 = compensated_sum(residuals.iter().map(|&r| r * r)) / nf;
    Ok(mean_r2 * bracket)
}

/// Zheng's standardized statistic and its upper-tail normal p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZhengStatistic<T> {
    pub statistic: T,
    pub p_value: T,
}

/// `n h^(p/2) V1 / √Σ̂` with `Σ̂ = 2/(n(n−1)h^p) Σ_{j≠k} K²((xⱼ−xₖ)/h) η̂ⱼ² η̂ₖ²`.
///
/// Identically zero residuals give statistic 0 and p-value 0.5.
pub fn zheng_statistic<T: Scalar>(residuals: &[T], x: &Matrix<T>, cfg: &KernelConfig<T>) -> Result<ZhengStatistic<T>> {
    let n = residuals.len();
    if n < 2 || x.rows() != n {
        return Err(Error::Contract("Zheng statistic needs n >= 2 matching rows".into()));
    }
    if residuals.iter().all(|r| *r == T::zero()) {
        return Ok(ZhengStatistic { statistic: T::zero(), p_value: T::lit(0.5) });
    }
    let p = x.cols() as i32;
    let h = cfg.bandwidth;
    let hp = h.powi(p);
    let nf = T::from_usize_lossy(n);
    let pairs = nf * T::from_usize_lossy(n - 1);
    let v1 = v1(residuals, x, cfg);
    let half = upper_pair_sum(n, |j, k| {
        let kern = cfg.kernel(x.row(j), x.row(k));
        kern * kern * residuals[j] * residuals[j] * residuals[k] * residuals[k]
    });
    let variance = T::lit(2.0) * T::lit(2.0) * half / (pairs * hp);
    if !(variance > T::zero()) {
        return Err(Error::DegenerateVariance(format!("Zheng variance estimate is {variance}")));
    }
    let statistic = nf * hp.sqrt() * v1 / variance.sqrt();
    let p_value = T::lit(normal_upper_tail(statistic.to_f64_lossy()));
    Ok(ZhengStatistic { statistic, p_value })
}
