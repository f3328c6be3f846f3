//! Parametric regression families and their least-squares fit.
//!
//! Fitting uses Levenberg–Marquardt with Marquardt diagonal scaling. Without a
//! supplied starting point the fit is multi-started from standard-normal draws
//! and the smallest residual sum of squares wins.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::FeatureTerm;
use crate::linalg::{cholesky, cholesky_solve, Matrix};
use crate::scalar::Scalar;

/// Covariate rows and responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    pub x: Matrix<T>,
    pub y: Vec<T>,
    /// Covariate column names; generated as `x1..xp` when absent.
    pub covariate_names: Vec<String>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(x: Matrix<T>, y: Vec<T>) -> Result<Self> {
        let names = (1..=x.cols()).map(|j| format!("x{j}")).collect();
        Self::with_names(x, y, names)
    }

    pub fn with_names(x: Matrix<T>, y: Vec<T>, covariate_names: Vec<String>) -> Result<Self> {
        let ds = Self { x, y, covariate_names };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.rows() != self.y.len() {
            return Err(Error::InvalidData(format!(
                "{} covariate rows but {} responses",
                self.x.rows(),
                self.y.len()
            )));
        }
        if self.n() < 2 {
            return Err(Error::InvalidData(format!("need at least 2 rows, got {}", self.n())));
        }
        if self.p() < 1 {
            return Err(Error::InvalidData("need at least one covariate".into()));
        }
        if self.covariate_names.len() != self.p() {
            return Err(Error::InvalidData("covariate name count does not match columns".into()));
        }
        if let Some(i) = self.y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("response in row {i} is not finite")));
        }
        for (i, row) in self.x.row_iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("covariate ({i}, {j}) is not finite")));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.y.len()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.x.cols()
    }
}

type MeanFn<T> = dyn Fn(&[T], &[T]) -> T + Send + Sync;
type GradFn<T> = dyn Fn(&[T], &[T], &mut [T]) + Send + Sync;

/// A regression family `g(x, θ)` with `θ ∈ R^d`.
#[derive(Clone)]
pub struct ParametricModel<T> {
    name: String,
    d: usize,
    mean: Arc<MeanFn<T>>,
    gradient: Option<Arc<GradFn<T>>>,
    default_init: Option<Vec<T>>,
}

impl<T> fmt::Debug for ParametricModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricModel")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl<T: Scalar> ParametricModel<T> {
    pub fn new(
        name: impl Into<String>,
        d: usize,
        mean: impl Fn(&[T], &[T]) -> T + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), d, mean: Arc::new(mean), gradient: None, default_init: None }
    }

    /// Attaches an analytic gradient `∂g/∂θ`, written into the output slice.
    pub fn with_gradient(mut self, grad: impl Fn(&[T], &[T], &mut [T]) + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(grad));
        self
    }

    pub fn with_default_init(mut self, init: Vec<T>) -> Self {
        assert_eq!(init.len(), self.d, "default init has wrong length");
        self.default_init = Some(init);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn default_init(&self) -> Option<&[T]> {
        self.default_init.as_deref()
    }

    #[inline]
    pub fn mean(&self, x: &[T], theta: &[T]) -> T {
        (self.mean)(x, theta)
    }

    /// `∂g/∂θ` at `(x, θ)`: analytic when available, central differences otherwise.
    pub fn gradient(&self, x: &[T], theta: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.d];
        match &self.gradient {
            Some(g) => g(x, theta, &mut out),
            None => self.finite_difference_gradient_into(x, theta, &mut out),
        }
        out
    }

    pub fn finite_difference_gradient(&self, x: &[T], theta: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.d];
        self.finite_difference_gradient_into(x, theta, &mut out);
        out
    }

    fn finite_difference_gradient_into(&self, x: &[T], theta: &[T], out: &mut [T]) {
        let mut probe = theta.to_vec();
        for i in 0..self.d {
            let h = difference_step(theta[i]);
            probe[i] = theta[i] + h;
            let up = self.mean(x, &probe);
            probe[i] = theta[i] - h;
            let down = self.mean(x, &probe);
            probe[i] = theta[i];
            out[i] = (up - down) / (h + h);
        }
    }
}

/// Central-difference step: cbrt(eps)·max(1, |θ|), rounded down to a power of
/// two so that `θ ± h` is formed without extra rounding.
pub fn difference_step<T: Scalar>(theta: T) -> T {
    let raw = T::epsilon().cbrt() * theta.abs().max(T::one());
    let two = T::lit(2.0);
    two.powi(raw.log2().floor().to_i32().unwrap_or(-17))
}

/// Largest relative discrepancy between the analytic gradient and central
/// differences over the probe points, measured as |a − fd| / max(1, |a|).
pub fn gradient_check<T: Scalar>(model: &ParametricModel<T>, theta: &[T], probes: &[Vec<T>]) -> Result<T> {
    let analytic = model
        .gradient
        .as_ref()
        .ok_or_else(|| Error::Contract(format!("model `{}` has no analytic gradient", model.name)))?;
    if theta.len() != model.d {
        return Err(Error::Contract(format!("theta has length {}, model needs {}", theta.len(), model.d)));
    }
    let mut worst = T::zero();
    let mut a = vec![T::zero(); model.d];
    for x in probes {
        analytic(x, theta, &mut a);
        let fd = model.finite_difference_gradient(x, theta);
        for (ai, fi) in a.iter().zip(&fd) {
            worst = worst.max((*ai - *fi).abs() / ai.abs().max(T::one()));
        }
    }
    Ok(worst)
}

/// Levenberg–Marquardt settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub initial_damping: f64,
    pub damping_factor: f64,
    /// Stop once an accepted step lowers the RSS by less than this fraction.
    pub rss_relative_tolerance: f64,
    /// Stop once `gradient_norm` falls below this.
    pub gradient_tolerance: f64,
    /// A fit is converged when `gradient_norm <= stationarity_tolerance * (1 + rss)`.
    pub stationarity_tolerance: f64,
    /// Random restarts used when no starting point is supplied.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            initial_damping: 1e-3,
            damping_factor: 10.0,
            rss_relative_tolerance: 1e-10,
            gradient_tolerance: 1e-8,
            stationarity_tolerance: 1e-6,
            restarts: 10,
            seed: 0,
        }
    }
}

impl FitOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Outcome of a least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    pub theta_hat: Vec<T>,
    pub residuals: Vec<T>,
    pub rss: T,
    pub converged: bool,
    pub iterations: usize,
    /// `max_i |Σ_j η̂_j ∂g(x_j, θ̂)/∂θ_i| / n`.
    pub gradient_norm: T,
}

/// Least-squares fit of `model` to `data`.
///
/// With `init` the fit is a single Levenberg–Marquardt run from it. Otherwise
/// the model's default start (if any) and `options.restarts` standard-normal
/// starts drawn from `options.seed` are tried and the smallest RSS is kept.
pub fn fit_least_squares<T: Scalar>(
    data: &Dataset<T>,
    model: &ParametricModel<T>,
    init: Option<&[T]>,
    options: &FitOptions,
) -> Result<FitResult<T>> {
    data.validate()?;
    let (n, d) = (data.n(), model.d());
    if d >= n {
        return Err(Error::IllPosed { d, n });
    }
    if let Some(init) = init {
        if init.len() != d {
            return Err(Error::Contract(format!("init has length {}, model needs {d}", init.len())));
        }
        return levenberg_marquardt(data, model, init.to_vec(), options);
    }

    let mut starts: Vec<Vec<T>> = Vec::with_capacity(options.restarts + 1);
    if let Some(def) = model.default_init() {
        starts.push(def.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for _ in 0..options.restarts.max(usize::from(starts.is_empty())) {
        starts.push(
            (0..d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    T::lit(z)
                })
                .collect(),
        );
    }

    let mut best: Option<FitResult<T>> = None;
    let mut first_err = None;
    for start in starts {
        match levenberg_marquardt(data, model, start, options) {
            Ok(fit) => {
                if best.as_ref().map_or(true, |b| fit.rss < b.rss) {
                    best = Some(fit);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.unwrap_or_else(|| Error::Diverged("no start produced a fit".into())))
}

struct Evaluation<T> {
    residuals: Vec<T>,
    rss: T,
}

fn evaluate<T: Scalar>(data: &Dataset<T>, model: &ParametricModel<T>, theta: &[T]) -> Option<Evaluation<T>> {
    let mut residuals = Vec::with_capacity(data.n());
    let mut rss = T::zero();
    for (x, &y) in data.x.row_iter().zip(&data.y) {
        let r = y - model.mean(x, theta);
        if !r.is_finite() {
            return None;
        }
        rss = rss + r * r;
        residuals.push(r);
    }
    rss.is_finite().then_some(Evaluation { residuals, rss })
}

/// Normal-equation pieces `JᵀJ` and `Jᵀr` for residuals `r = y − g`.
fn normal_equations<T: Scalar>(
    data: &Dataset<T>,
    model: &ParametricModel<T>,
    theta: &[T],
    residuals: &[T],
) -> (Matrix<T>, Vec<T>) {
    let d = model.d();
    let mut jtj = Matrix::zeros(d, d);
    let mut jtr = vec![T::zero(); d];
    for (x, &r) in data.x.row_iter().zip(residuals) {
        let g = model.gradient(x, theta);
        for a in 0..d {
            jtr[a] = jtr[a] + g[a] * r;
            for b in 0..=a {
                jtj[(a, b)] = jtj[(a, b)] + g[a] * g[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            jtj[(b, a)] = jtj[(a, b)];
        }
    }
    (jtj, jtr)
}

fn scaled_gradient_norm<T: Scalar>(jtr: &[T], n: usize) -> T {
    jtr.iter().fold(T::zero(), |m, g| m.max(g.abs())) / T::from_usize_lossy(n)
}

fn levenberg_marquardt<T: Scalar>(
    data: &Dataset<T>,
    model: &ParametricModel<T>,
    mut theta: Vec<T>,
    options: &FitOptions,
) -> Result<FitResult<T>> {
    let n = data.n();
    let d = model.d();
    let mut current = evaluate(data, model, &theta)
        .ok_or_else(|| Error::Diverged(format!("model `{}` is not finite at the starting point", model.name())))?;
    let factor = T::lit(options.damping_factor);
    let max_damping = T::lit(1e16);
    let min_damping = T::lit(1e-300_f64.max(T::min_positive_value().to_f64_lossy()));
    let mut damping = T::lit(options.initial_damping);
    let gtol = T::lit(options.gradient_tolerance);
    let ftol = T::lit(options.rss_relative_tolerance);
    let mut iterations = 0;

    'outer: while iterations < options.max_iterations {
        let (jtj, jtr) = normal_equations(data, model, &theta, &current.residuals);
        if scaled_gradient_norm(&jtr, n) < gtol || current.rss == T::zero() {
            break;
        }
        iterations += 1;
        let diag_floor = (0..d).map(|i| jtj[(i, i)]).fold(T::zero(), T::max) * T::epsilon();
        loop {
            let mut system = jtj.clone();
            for i in 0..d {
                system[(i, i)] = system[(i, i)] + damping * jtj[(i, i)].max(diag_floor).max(T::min_positive_value());
            }
            let step = cholesky(&system, T::zero()).ok().map(|l| cholesky_solve(&l, &jtr));
            let trial = step.and_then(|delta| {
                let cand: Vec<T> = theta.iter().zip(&delta).map(|(&t, &s)| t + s).collect();
                if cand.iter().all(|v| v.is_finite()) {
                    evaluate(data, model, &cand).map(|e| (cand, e))
                } else {
                    None
                }
            });
            match trial {
                Some((cand, eval)) if eval.rss < current.rss => {
                    let decrease = (current.rss - eval.rss) / current.rss;
                    theta = cand;
                    current = eval;
                    damping = (damping / factor).max(min_damping);
                    if decrease < ftol {
                        break 'outer;
                    }
                    break;
                }
                _ => {
                    damping = damping * factor;
                    if damping > max_damping {
                        break 'outer;
                    }
                }
            }
        }
    }

    let (_, jtr) = normal_equations(data, model, &theta, &current.residuals);
    let gradient_norm = scaled_gradient_norm(&jtr, n);
    let converged = gradient_norm <= T::lit(options.stationarity_tolerance) * (T::one() + current.rss);
    Ok(FitResult { theta_hat: theta, residuals: current.residuals, rss: current.rss, converged, iterations, gradient_norm })
}

// ---------------------------------------------------------------------------
// Registry

/// Names accepted by [`model_by_name`].
pub const REGISTERED_MODELS: &[&str] = &[
    "intercept",
    "linear",
    "linear-intercept",
    "polynomial:k",
    "exp-index",
    "quadratic-index",
    "study4",
    "quadratic-geo",
];

/// Built-in family for covariate dimension `p`.
///
/// | name | g(x, θ) | d |
/// |---|---|---|
/// | `intercept` | θ | 1 |
/// | `linear` | θᵀx | p |
/// | `linear-intercept` | θ₀ + θᵀx | p + 1 |
/// | `polynomial:k` | θ₀ + Σᵢ Σₘ θᵢₘ xᵢᵐ, m = 1..k | 1 + pk |
/// | `exp-index` (`study1`, `study3`) | θ₁ exp(θ₂ᵀx) | p + 1 |
/// | `quadratic-index` (`study2`) | βᵀx + γ(βᵀx)² | p + 1 |
/// | `study4` | θᵀ(x₁, x₂², x₃³, x₄x₅, sin x₆) | 5 |
/// | `quadratic-geo` | θ₀ + θᵀ(x₁..x₆, x₅², x₆², x₅x₆) | 10 |
pub fn model_by_name<T: Scalar>(name: &str, p: usize) -> Result<ParametricModel<T>> {
    if p == 0 {
        return Err(Error::Config("covariate dimension must be positive".into()));
    }
    let m = match name {
        "intercept" => ParametricModel::new("intercept", 1, |_x: &[T], th: &[T]| th[0])
            .with_gradient(|_x, _th, g| g[0] = T::one())
            .with_default_init(vec![T::zero()]),
        "linear" => linear_in_features("linear", p, vec![], false),
        "linear-intercept" => linear_in_features("linear-intercept", p, vec![], true),
        "exp-index" | "study1" | "study3" => exp_index(p),
        "quadratic-index" | "study2" => quadratic_index(p),
        "study4" => {
            require_p(name, p, 6, false)?;
            let terms = vec![
                FeatureTerm::Identity(1),
                FeatureTerm::Square(2),
                FeatureTerm::Cube(3),
                FeatureTerm::Product(4, 5),
                FeatureTerm::Sin(6),
            ];
            linear_in_terms("study4", terms, false)
        }
        "quadratic-geo" => {
            require_p(name, p, 6, true)?;
            let mut terms: Vec<FeatureTerm> = (1..=6).map(FeatureTerm::Identity).collect();
            terms.extend([FeatureTerm::Square(5), FeatureTerm::Square(6), FeatureTerm::Product(5, 6)]);
            linear_in_terms("quadratic-geo", terms, true)
        }
        other => {
            if let Some(k) = other.strip_prefix("polynomial:") {
                let k: usize = k
                    .parse()
                    .ok()
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| Error::UnknownModel(other.to_string()))?;
                polynomial(p, k)
            } else {
                return Err(Error::UnknownModel(other.to_string()));
            }
        }
    };
    Ok(m)
}

fn require_p(name: &str, p: usize, need: usize, exact: bool) -> Result<()> {
    let ok = if exact { p == need } else { p >= need };
    if ok {
        Ok(())
    } else {
        let rel = if exact { "exactly" } else { "at least" };
        Err(Error::Config(format!("model `{name}` needs {rel} {need} covariates, got {p}")))
    }
}

fn linear_in_features<T: Scalar>(name: &str, p: usize, extra: Vec<FeatureTerm>, intercept: bool) -> ParametricModel<T> {
    let mut terms: Vec<FeatureTerm> = (1..=p).map(FeatureTerm::Identity).collect();
    terms.extend(extra);
    linear_in_terms(name, terms, intercept)
}

/// `θᵀ φ(x)` where φ lists the given feature terms, optionally led by a constant.
pub fn linear_in_terms<T: Scalar>(name: &str, terms: Vec<FeatureTerm>, intercept: bool) -> ParametricModel<T> {
    let offset = usize::from(intercept);
    let d = terms.len() + offset;
    let terms = Arc::new(terms);
    let t2 = Arc::clone(&terms);
    ParametricModel::new(name, d, move |x: &[T], th: &[T]| {
        let base = if intercept { th[0] } else { T::zero() };
        terms.iter().zip(&th[offset..]).fold(base, |acc, (t, &c)| acc + c * t.eval(x))
    })
    .with_gradient(move |x, _th, g| {
        if intercept {
            g[0] = T::one();
        }
        for (gi, t) in g[offset..].iter_mut().zip(t2.iter()) {
            *gi = t.eval(x);
        }
    })
    .with_default_init(vec![T::zero(); d])
}

fn polynomial<T: Scalar>(p: usize, k: usize) -> ParametricModel<T> {
    let d = 1 + p * k;
    ParametricModel::new(format!("polynomial:{k}"), d, move |x: &[T], th: &[T]| {
        let mut acc = th[0];
        for (i, &xi) in x.iter().enumerate().take(p) {
            let mut pow = T::one();
            for m in 0..k {
                pow = pow * xi;
                acc = acc + th[1 + i * k + m] * pow;
            }
        }
        acc
    })
    .with_gradient(move |x, _th, g| {
        g[0] = T::one();
        for (i, &xi) in x.iter().enumerate().take(p) {
            let mut pow = T::one();
            for m in 0..k {
                pow = pow * xi;
                g[1 + i * k + m] = pow;
            }
        }
    })
    .with_default_init(vec![T::zero(); d])
}

fn exp_index<T: Scalar>(p: usize) -> ParametricModel<T> {
    ParametricModel::new("exp-index", p + 1, |x: &[T], th: &[T]| {
        let idx = x.iter().zip(&th[1..]).fold(T::zero(), |a, (&xi, &b)| a + xi * b);
        th[0] * idx.exp()
    })
    .with_gradient(|x, th, g| {
        let idx = x.iter().zip(&th[1..]).fold(T::zero(), |a, (&xi, &b)| a + xi * b);
        let e = idx.exp();
        g[0] = e;
        for (gi, &xi) in g[1..].iter_mut().zip(x) {
            *gi = th[0] * e * xi;
        }
    })
}

fn quadratic_index<T: Scalar>(p: usize) -> ParametricModel<T> {
    ParametricModel::new("quadratic-index", p + 1, move |x: &[T], th: &[T]| {
        let idx = x.iter().zip(&th[..p]).fold(T::zero(), |a, (&xi, &b)| a + xi * b);
        idx + th[p] * idx * idx
    })
    .with_gradient(move |x, th, g| {
        let idx = x.iter().zip(&th[..p]).fold(T::zero(), |a, (&xi, &b)| a + xi * b);
        let slope = T::one() + T::lit(2.0) * th[p] * idx;
        for (gi, &xi) in g[..p].iter_mut().zip(x) {
            *gi = slope * xi;
        }
        g[p] = idx * idx;
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(rows: &[Vec<f64>], y: Vec<f64>) -> Dataset<f64> {
        Dataset::new(Matrix::from_rows(rows).unwrap(), y).unwrap()
    }

    #[test]
    fn exactly_determined_linear_data_is_interpolated() {
        let rows = vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, -2.0]];
        let truth = [1.5, -0.75];
        let y = rows.iter().map(|r| r[0] * truth[0] + r[1] * truth[1]).collect();
        let data = dataset(&rows, y);
        let model = model_by_name::<f64>("linear", 2).unwrap();
        let fit = fit_least_squares(&data, &model, None, &FitOptions::default()).unwrap();
        for (a, b) in fit.theta_hat.iter().zip(truth) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!(fit.rss < 1e-20);
        assert!(fit.converged);
    }

    #[test]
    fn ill_posed_when_parameters_outnumber_rows() {
        let data = dataset(&[vec![1.0, 2.0], vec![3.0, 4.0]], vec![1.0, 2.0]);
        let model = model_by_name::<f64>("linear-intercept", 2).unwrap();
        let err = fit_least_squares(&data, &model, None, &FitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::IllPosed { d: 3, n: 2 }));
    }

    #[test]
    fn non_finite_start_is_diverged() {
        let data = dataset(&[vec![800.0], vec![900.0], vec![1000.0]], vec![1.0, 2.0, 3.0]);
        let model = model_by_name::<f64>("exp-index", 1).unwrap();
        let err = fit_least_squares(&data, &model, Some(&[1.0, 1.0]), &FitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Diverged(_)), "{err}");
    }

    #[test]
    fn wrong_init_length_is_rejected() {
        let data = dataset(&[vec![1.0], vec![2.0], vec![3.0]], vec![1.0, 2.0, 3.0]);
        let model = model_by_name::<f64>("linear", 1).unwrap();
        assert!(fit_least_squares(&data, &model, Some(&[1.0, 2.0]), &FitOptions::default()).is_err());
    }

    #[test]
    fn linear_gradient_check_is_exact_on_dyadic_points() {
        let model = model_by_name::<f64>("linear", 3).unwrap();
        let probes = vec![vec![1.0, -2.0, 0.5], vec![3.0, 0.25, -4.0]];
        assert_eq!(gradient_check(&model, &[0.5, -1.0, 2.0], &probes).unwrap(), 0.0);
    }

    #[test]
    fn gradient_check_requires_analytic_gradient() {
        let model = ParametricModel::<f64>::new("bare", 1, |x, th| th[0] * x[0]);
        assert!(gradient_check(&model, &[1.0], &[vec![1.0]]).is_err());
        // central-difference surrogate still works
        let g = model.gradient(&[3.0], &[2.0]);
        assert!((g[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn difference_step_is_power_of_two() {
        for t in [0.0, 0.3, 1.0, 17.0, -250.0] {
            let h: f64 = difference_step(t);
            assert_eq!(h.log2().fract(), 0.0);
            let target = f64::EPSILON.cbrt() * t.abs().max(1.0);
            assert!(h <= target && h > target / 2.0);
        }
    }

    #[test]
    fn registry_rejects_unknown_and_bad_dimensions() {
        assert!(matches!(model_by_name::<f64>("nope", 2), Err(Error::UnknownModel(_))));
        assert!(model_by_name::<f64>("study4", 5).is_err());
        assert!(model_by_name::<f64>("quadratic-geo", 7).is_err());
        assert!(model_by_name::<f64>("polynomial:0", 2).is_err());
        assert_eq!(model_by_name::<f64>("polynomial:3", 2).unwrap().d(), 7);
        assert_eq!(model_by_name::<f64>("quadratic-geo", 6).unwrap().d(), 10);
        assert_eq!(model_by_name::<f64>("study1", 8).unwrap().d(), 9);
    }

    #[test]
    fn dataset_validation() {
        let x = Matrix::from_rows(&[vec![1.0], vec![f64::NAN]]).unwrap();
        assert!(Dataset::new(x, vec![1.0, 2.0]).is_err());
        let x = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(Dataset::new(x, vec![1.0]).is_err());
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(Dataset::new(x, vec![1.0]).is_err());
    }
}
