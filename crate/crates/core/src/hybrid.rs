//! The adaptive-to-model hybrid statistic.
//!
//! `Tn = n·V0²/σ̂0²` when the estimated indicative dimension is zero and
//! `Tn = n·|V1|/σ̂0²` otherwise; both are referred to the χ²₁ upper tail.

use serde::{Deserialize, Serialize};

use crate::dimension::{target_matrix, tdrr, RidgeOverride, TdrrChain};
use crate::error::{Error, Result};
use crate::kernel_stats::{
    sigma0_sq_hat, standardize_columns, v0, v1, weights, zheng_statistic, KernelConfig, WeightConfig,
    ZhengStatistic, DEFAULT_BANDWIDTH_MULTIPLIER,
};
use crate::model::{fit_least_squares, Dataset, FitOptions, FitResult, ParametricModel};
use crate::scalar::{compensated_sum, Scalar};

pub use crate::special::chi2_1_upper_tail;

/// Which component of the hybrid produced `Tn`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Moment,
    Kernel,
}

/// Tuning of a single test run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestConfig<T> {
    pub weight: WeightConfig<T>,
    /// `c_h` in `h = c_h · n^(-1/(p+4))`.
    pub bandwidth_multiplier: T,
    /// Ridges `c1n`, `c2n` (defaulted from n when unset) and threshold `τ`.
    pub ridges: RidgeOverride<T>,
    /// Standardize covariates before weights, kernel, and target matrix.
    pub standardize: bool,
    /// Also compute Zheng's statistic on the same residuals.
    pub zheng: bool,
    pub fit: FitOptions,
}

impl<T: Scalar> Default for TestConfig<T> {
    fn default() -> Self {
        Self {
            weight: WeightConfig::default(),
            bandwidth_multiplier: T::lit(DEFAULT_BANDWIDTH_MULTIPLIER),
            ridges: RidgeOverride::default(),
            standardize: true,
            zheng: false,
            fit: FitOptions::default(),
        }
    }
}

/// Configuration values actually used, echoed in the outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho<T> {
    pub model: String,
    pub c: T,
    pub bandwidth_multiplier: T,
    pub c1n: T,
    pub c2n: T,
    pub tau: T,
    pub standardize: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome<T> {
    pub n: usize,
    pub p: usize,
    pub q_hat: usize,
    pub branch: Branch,
    pub v0: T,
    pub v1: T,
    pub sigma0_sq: T,
    pub t_n: T,
    pub p_value: T,
    pub h: T,
    pub theta_hat: Vec<T>,
    pub rss: T,
    pub eigenvalues: Vec<T>,
    pub tdrr: TdrrChain<T>,
    pub zheng: Option<ZhengStatistic<T>>,
    pub config: ConfigEcho<T>,
}

/// Fit → residuals → standardized covariates → target matrix → q̂ → branch
/// statistic → χ²₁ p-value.
pub fn hybrid_test<T: Scalar>(
    data: &Dataset<T>,
    model: &ParametricModel<T>,
    config: &TestConfig<T>,
) -> Result<TestOutcome<T>> {
    data.validate()?;
    let (n, p) = (data.n(), data.p());
    if n < p + 2 {
        return Err(Error::InsufficientSample { n, required: p + 2 });
    }
    let fit = fit_least_squares(data, model, None, &config.fit)?;
    if !fit.converged {
        return Err(Error::NotConverged { gradient_norm: fit.gradient_norm.to_f64_lossy() });
    }
    hybrid_from_fit(data, model, &fit, config)
}

/// Same as [`hybrid_test`] for an already computed fit.
pub fn hybrid_from_fit<T: Scalar>(
    data: &Dataset<T>,
    model: &ParametricModel<T>,
    fit: &FitResult<T>,
    config: &TestConfig<T>,
) -> Result<TestOutcome<T>> {
    let (n, p) = (data.n(), data.p());
    if n < p + 2 {
        return Err(Error::InsufficientSample { n, required: p + 2 });
    }
    let z = if config.standardize { standardize_columns(&data.x)? } else { data.x.clone() };
    let ridges = config.ridges.resolve(n)?;
    let kernel = KernelConfig::from_rule(n, p, config.bandwidth_multiplier)?;

    let target = target_matrix(&z, &fit.residuals)?;
    let chain = tdrr(&target.eigenvalues, &ridges);
    let w = weights(&z, &config.weight);
    let v0 = v0(&fit.residuals, &w);
    let v1 = v1(&fit.residuals, &z, &kernel);
    let sigma0_sq = sigma0_sq_hat(fit, &data.x, model, &w)?;

    let nf = T::from_usize_lossy(n);
    let mean_r2 = compensated_sum(fit.residuals.iter().map(|&r| r * r)) / nf;
    if !(sigma0_sq >= T::lit(1e-12) * (T::one() + mean_r2)) {
        return Err(Error::DegenerateVariance(format!(
            "σ̂0² = {:e} is below 1e-12·(1 + mean η̂²)",
            sigma0_sq.to_f64_lossy()
        )));
    }
    let (branch, t_n) = if chain.q_hat == 0 {
        (Branch::Moment, nf * v0 * v0 / sigma0_sq)
    } else {
        (Branch::Kernel, nf * v1.abs() / sigma0_sq)
    };
    let p_value = T::lit(chi2_1_upper_tail(t_n.to_f64_lossy())?);
    let zheng = if config.zheng { zheng_statistic(&fit.residuals, &z, &kernel).ok() } else { None };

    Ok(TestOutcome {
        n,
        p,
        q_hat: chain.q_hat,
        branch,
        v0,
        v1,
        sigma0_sq,
        t_n,
        p_value,
        h: kernel.bandwidth,
        theta_hat: fit.theta_hat.clone(),
        rss: fit.rss,
        eigenvalues: target.eigenvalues,
        tdrr: chain,
        zheng,
        config: ConfigEcho {
            model: model.name().to_string(),
            c: config.weight.c,
            bandwidth_multiplier: config.bandwidth_multiplier,
            c1n: ridges.c1n,
            c2n: ridges.c2n,
            tau: ridges.tau,
            standardize: config.standardize,
            seed: config.fit.seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::model_by_name;

    #[test]
    fn insufficient_sample() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 1.0, 0.0], vec![0.5, 0.5, 1.0]]).unwrap();
        let data = Dataset::new(x, vec![1.0, 2.0, 3.0]).unwrap();
        let model = model_by_name::<f64>("intercept", 3).unwrap();
        let err = hybrid_test(&data, &model, &TestConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientSample { n: 3, required: 5 }));
    }

    #[test]
    fn zero_noise_hits_degenerate_variance() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let y = rows.iter().map(|r| 0.5 * r[0] - 1.5 * r[1]).collect();
        let data = Dataset::new(Matrix::from_rows(&rows).unwrap(), y).unwrap();
        let model = model_by_name::<f64>("linear", 2).unwrap();
        let err = hybrid_test(&data, &model, &TestConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateVariance(_)), "{err}");
    }
}
