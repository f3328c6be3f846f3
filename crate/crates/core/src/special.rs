//! Tail probabilities built on the complementary error function.

use libm::erfc;

use crate::error::{Error, Result};

/// `P(χ²₁ > t) = erfc(√(t/2))`.
pub fn chi2_1_upper_tail(t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Contract(format!("chi-square statistic must be non-negative, got {t}")));
    }
    if t == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(erfc((t / 2.0).sqrt()))
}

/// `χ²₁` cumulative distribution function.
pub fn chi2_1_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        1.0 - erfc((t / 2.0).sqrt())
    }
}

/// `P(Z > z)` for a standard normal `Z`.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}
