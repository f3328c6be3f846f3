//! Adaptive-to-model hybrid lack-of-fit test for parametric regressions.
//!
//! A parametric family is fitted by least squares; the dimension of the
//! residual central subspace is estimated from a characteristic-function
//! target matrix; the statistic then switches between a weighted-moment test
//! (dimension zero, χ²₁ calibrated) and a kernel U-statistic (positive
//! dimension), both standardized by the moment variance.
//!
//! Numerical routines are generic over [`Scalar`] (`f32`/`f64`); the aliases
//! below fix the scalar for callers who do not care. The Monte Carlo driver in
//! [`simulation`] works in `f64`.

pub mod cli;
pub mod dimension;
pub mod error;
pub mod hybrid;
pub mod io;
pub mod kernel_stats;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod simulation;
pub mod special;

pub use dimension::{default_ridges, hermitian_eigenvalues, target_matrix, tdrr, tdrr_dimension, RidgeConfig};
pub use error::{Error, Result};
pub use hybrid::{chi2_1_upper_tail, hybrid_test, Branch, TestConfig};
pub use kernel_stats::{v0, v1, weight, zheng_statistic, KernelConfig, WeightConfig};
pub use model::{fit_least_squares, gradient_check, model_by_name, FitOptions};
pub use scalar::Scalar;

pub type Dataset64 = model::Dataset<f64>;
pub type Dataset32 = model::Dataset<f32>;
pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type Model64 = model::ParametricModel<f64>;
pub type Model32 = model::ParametricModel<f32>;
pub type FitResult64 = model::FitResult<f64>;
pub type FitResult32 = model::FitResult<f32>;
pub type TargetMatrix64 = dimension::TargetMatrix<f64>;
pub type TargetMatrix32 = dimension::TargetMatrix<f32>;
pub type TestOutcome64 = hybrid::TestOutcome<f64>;
pub type TestOutcome32 = hybrid::TestOutcome<f32>;
pub type TestConfig64 = hybrid::TestConfig<f64>;
pub type TestConfig32 = hybrid::TestConfig<f32>;
