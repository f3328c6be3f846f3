//! Indicative-dimension estimation.
//!
//! The target matrix `M̂ₙ = n⁻¹ Σⱼ m̂ₙ(η̂ⱼ) m̂ₙ(η̂ⱼ)ᴴ` is built from the empirical
//! characteristic moments `m̂ₙ(t) = n⁻¹ Σⱼ xⱼ exp(i t η̂ⱼ)` of centered covariates,
//! and its spectrum is passed through the thresholding double ridge ratio
//! (TDRR) rule to give `q̂`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, Matrix};
use crate::scalar::{compensated_sum, Scalar};

/// Default TDRR threshold.
pub const DEFAULT_TAU: f64 = 0.5;

/// p×p Hermitian target matrix stored as real and imaginary parts, with its
/// eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMatrix<T> {
    pub re: Matrix<T>,
    pub im: Matrix<T>,
    pub eigenvalues: Vec<T>,
}

impl<T: Scalar> TargetMatrix<T> {
    pub fn dim(&self) -> usize {
        self.re.rows()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        Complex::new(self.re[(i, j)], self.im[(i, j)])
    }

    pub fn trace(&self) -> T {
        (0..self.dim()).map(|i| self.re[(i, i)]).sum()
    }
}

/// Subtracts column means.
pub fn center_columns<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    let (n, p) = (x.rows(), x.cols());
    let mut out = x.clone();
    if n == 0 {
        return out;
    }
    for j in 0..p {
        let mean = compensated_sum(x.column(j)) / T::from_usize_lossy(n);
        for i in 0..n {
            out[(i, j)] = x[(i, j)] - mean;
        }
    }
    out
}

/// `m̂ₙ(t) = n⁻¹ Σⱼ xⱼ (cos(t η̂ⱼ) + i sin(t η̂ⱼ))`.
pub fn char_moment<T: Scalar>(x_centered: &Matrix<T>, residuals: &[T], t: T) -> Vec<Complex<T>> {
    let (n, p) = (x_centered.rows(), x_centered.cols());
    assert_eq!(n, residuals.len(), "residual count and covariate rows differ");
    let mut out = vec![Complex::new(T::zero(), T::zero()); p];
    if n == 0 {
        return out;
    }
    for (row, &r) in x_centered.row_iter().zip(residuals) {
        let (s, c) = (t * r).sin_cos();
        for (o, &xi) in out.iter_mut().zip(row) {
            o.re = o.re + xi * c;
            o.im = o.im + xi * s;
        }
    }
    let nf = T::from_usize_lossy(n);
    for o in &mut out {
        o.re = o.re / nf;
        o.im = o.im / nf;
    }
    out
}

/// Builds `M̂ₙ` from covariates (centered internally) and residuals, and
/// computes its spectrum.
pub fn target_matrix<T: Scalar>(x: &Matrix<T>, residuals: &[T]) -> Result<TargetMatrix<T>> {
    let (n, p) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::InvalidData("target matrix needs at least two observations".into()));
    }
    if residuals.len() != n {
        return Err(Error::Contract("residual count and covariate rows differ".into()));
    }
    let xc = center_columns(x);
    let moments: Vec<Vec<Complex<T>>> =
        residuals.par_iter().map(|&t| char_moment(&xc, residuals, t)).collect();
    let mut re: Matrix<T> = Matrix::zeros(p, p);
    let mut im: Matrix<T> = Matrix::zeros(p, p);
    for m in &moments {
        for a in 0..p {
            for b in 0..=a {
                // m_a · conj(m_b)
                let v = m[a] * m[b].conj();
                re[(a, b)] = re[(a, b)] + v.re;
                im[(a, b)] = im[(a, b)] + v.im;
            }
        }
    }
    let nf = T::from_usize_lossy(n);
    for a in 0..p {
        for b in 0..=a {
            re[(a, b)] = re[(a, b)] / nf;
            im[(a, b)] = im[(a, b)] / nf;
            re[(b, a)] = re[(a, b)];
            im[(b, a)] = -im[(a, b)];
        }
        im[(a, a)] = T::zero();
    }
    let eigenvalues = hermitian_eigenvalues(&re, &im)?;
    Ok(TargetMatrix { re, im, eigenvalues })
}

/// Eigenvalues (descending) of the Hermitian matrix `re + i·im`, via the real
/// symmetric embedding `[[re, −im], [im, re]]` whose spectrum lists each
/// eigenvalue twice.
pub fn hermitian_eigenvalues<T: Scalar>(re: &Matrix<T>, im: &Matrix<T>) -> Result<Vec<T>> {
    let p = re.rows();
    if re.cols() != p || im.rows() != p || im.cols() != p {
        return Err(Error::Contract("Hermitian eigenvalues need square parts of equal size".into()));
    }
    let scale = re.as_slice().iter().chain(im.as_slice()).fold(T::one(), |m, v| m.max(v.abs()));
    let tol = T::lit(1e-10) * scale;
    for i in 0..p {
        for j in 0..=i {
            let re_gap = (re[(i, j)] - re[(j, i)]).abs();
            let im_gap = (im[(i, j)] + im[(j, i)]).abs();
            if !(re_gap <= tol && im_gap <= tol) {
                return Err(Error::Contract(format!("matrix is not Hermitian at ({i}, {j})")));
            }
        }
    }
    let mut big = Matrix::zeros(2 * p, 2 * p);
    for i in 0..p {
        for j in 0..p {
            big[(i, j)] = re[(i, j)];
            big[(i + p, j + p)] = re[(i, j)];
            big[(i, j + p)] = -im[(i, j)];
            big[(i + p, j)] = im[(i, j)];
        }
    }
    let doubled = symmetric_eigenvalues(&big)?;
    Ok(doubled.into_iter().step_by(2).collect())
}

/// Ridges and threshold of the TDRR rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeConfig<T> {
    pub c1n: T,
    pub c2n: T,
    pub tau: T,
}

impl<T: Scalar> RidgeConfig<T> {
    pub fn new(c1n: T, c2n: T, tau: T) -> Result<Self> {
        if !(c1n > T::zero() && c2n > T::zero()) {
            return Err(Error::Config("ridges must be positive".into()));
        }
        if !(tau > T::zero() && tau < T::one()) {
            return Err(Error::Config(format!("tau must lie in (0, 1), got {tau}")));
        }
        Ok(Self { c1n, c2n, tau })
    }
}

/// Ridge settings resolved per sample size: unset ridges take their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeOverride<T> {
    pub c1n: Option<T>,
    pub c2n: Option<T>,
    pub tau: T,
}

impl<T: Scalar> Default for RidgeOverride<T> {
    fn default() -> Self {
        Self { c1n: None, c2n: None, tau: T::lit(DEFAULT_TAU) }
    }
}

impl<T: Scalar> RidgeOverride<T> {
    pub fn resolve(&self, n: usize) -> Result<RidgeConfig<T>> {
        let d = default_ridges::<T>(n.max(2));
        RidgeConfig::new(self.c1n.unwrap_or(d.c1n), self.c2n.unwrap_or(d.c2n), self.tau)
    }
}

/// `c1n = 3·10⁻⁴·√8·ln n/√n`, `c2n = (4/5)·√8·ln n/√n`, `τ = 0.5`.
pub fn default_ridges<T: Scalar>(n: usize) -> RidgeConfig<T> {
    assert!(n >= 2, "ridges need n >= 2");
    let nf = T::from_usize_lossy(n);
    let base = T::lit(8.0).sqrt() * nf.ln() / nf.sqrt();
    RidgeConfig { c1n: T::lit(3e-4) * base, c2n: T::lit(0.8) * base, tau: T::lit(DEFAULT_TAU) }
}

/// Every intermediate of the TDRR rule, for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdrrChain<T> {
    /// `ŝⱼ = λ̂ⱼ/(λ̂ⱼ + 1)`, j = 1..p.
    pub s: Vec<T>,
    /// `ŝⱼ* = (ŝⱼ² + c1n)/(ŝⱼ₊₁² + c1n) − 1`, j = 1..p.
    pub s_star: Vec<T>,
    /// `r̂ⱼ = (ŝⱼ₊₁* + c2n)/(ŝⱼ* + c2n)`, j = 1..p.
    pub r: Vec<T>,
    pub q_hat: usize,
}

/// Runs the ratio chain on descending eigenvalues. Negative eigenvalues are
/// clamped to zero and `ŝⱼ = 0` for `j > p`, so `ŝₚ₊₁* = 0`.
pub fn tdrr<T: Scalar>(eigenvalues: &[T], cfg: &RidgeConfig<T>) -> TdrrChain<T> {
    let p = eigenvalues.len();
    let mut s: Vec<T> = eigenvalues
        .iter()
        .map(|&l| {
            let l = l.max(T::zero());
            l / (l + T::one())
        })
        .collect();
    s.extend([T::zero(), T::zero()]);
    let s_star: Vec<T> = (0..=p).map(|j| (s[j] * s[j] + cfg.c1n) / (s[j + 1] * s[j + 1] + cfg.c1n) - T::one()).collect();
    let r: Vec<T> = (0..p).map(|j| (s_star[j + 1] + cfg.c2n) / (s_star[j] + cfg.c2n)).collect();
    let q_hat = r.iter().rposition(|&rj| rj <= cfg.tau).map_or(0, |j| j + 1);
    s.truncate(p);
    TdrrChain { s, s_star: s_star[..p].to_vec(), r, q_hat }
}

/// `q̂`: the largest `j` with `r̂ⱼ ≤ τ`, or 0 when every ratio exceeds `τ`.
pub fn tdrr_dimension<T: Scalar>(eigenvalues: &[T], cfg: &RidgeConfig<T>) -> usize {
    tdrr(eigenvalues, cfg).q_hat
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_moment_at_zero_and_constant_residuals() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0], vec![-0.5, 4.0]]).unwrap();
        let xc = center_columns(&x);
        for m in char_moment(&xc, &[0.3, -1.2, 2.0], 0.0) {
            assert!(m.norm() < 1e-15);
        }
        for m in char_moment(&xc, &[0.7; 3], 1.9) {
            assert!(m.norm() < 1e-15);
        }
    }

    #[test]
    fn char_moment_four_points() {
        let x = Matrix::from_rows(&[vec![1.0], vec![-2.0], vec![0.5], vec![3.0]]).unwrap();
        let r = [0.1, -0.4, 1.3, 0.8];
        let t = 1.7f64;
        let (mut re, mut im) = (0.0, 0.0);
        for k in 0..4 {
            re += x[(k, 0)] * (t * r[k]).cos();
            im += x[(k, 0)] * (t * r[k]).sin();
        }
        let m = char_moment(&x, &r, t);
        assert!((m[0].re - re / 4.0).abs() < 1e-14 && (m[0].im - im / 4.0).abs() < 1e-14);
    }

    #[test]
    fn hermitian_eigenvalue_examples() {
        let id = Matrix::<f64>::identity(3);
        let zero = Matrix::zeros(3, 3);
        assert_eq!(hermitian_eigenvalues(&id, &zero).unwrap(), vec![1.0; 3]);
        let mut d = Matrix::zeros(3, 3);
        d[(0, 0)] = 3.0;
        d[(1, 1)] = 1.0;
        d[(2, 2)] = 2.0;
        assert_eq!(hermitian_eigenvalues(&d, &zero).unwrap(), vec![3.0, 2.0, 1.0]);
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1.
        let re = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let im = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let ev: Vec<f64> = hermitian_eigenvalues(&re, &im).unwrap();
        assert!((ev[0] - 3.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let re = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(hermitian_eigenvalues(&re, &Matrix::zeros(2, 2)).is_err());
        let im = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(hermitian_eigenvalues(&Matrix::identity(2), &im).is_err());
    }

    #[test]
    fn ridge_formulas() {
        let r = default_ridges::<f64>(200);
        assert!((r.c1n - 3.179e-4).abs() < 1e-7, "{}", r.c1n);
        assert!((r.c2n - 0.8477).abs() < 1e-4, "{}", r.c2n);
        assert_eq!(r.tau, 0.5);
        assert!(default_ridges::<f64>(400).c1n < r.c1n);
        // ln n = 2 plugged into the formula
        let n = std::f64::consts::E.powi(2);
        let c1 = 3e-4 * 8f64.sqrt() * n.ln() / n.sqrt();
        assert!((c1 - 3e-4 * 8f64.sqrt() * 2.0 / std::f64::consts::E).abs() < 1e-18);
        assert!(RidgeConfig::new(1.0, 1.0, 1.0).is_err());
        assert!(RidgeConfig::new(0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn tdrr_examples() {
        let cfg = default_ridges::<f64>(200);
        let chain = tdrr(&[0.0, 0.0, 0.0], &cfg);
        assert_eq!(chain.s_star, vec![0.0; 3]);
        assert_eq!(chain.r, vec![1.0; 3]);
        assert_eq!(chain.q_hat, 0);
        let chain = tdrr(&[10.0, 0.0, 0.0], &cfg);
        assert_eq!(chain.q_hat, 1);
        assert!(chain.r[0] < 1e-3);
        assert_eq!(&chain.r[1..], &[1.0, 1.0]);
        // tiny negative eigenvalues are clamped
        assert_eq!(tdrr_dimension(&[0.0, -1e-12], &cfg), 0);
        // a full-rank strong spectrum reaches q̂ = p
        assert_eq!(tdrr_dimension(&[5.0, 5.0], &cfg), 2);
    }
}
