//! Data-generating processes for the four simulation studies and a
//! deterministic Monte Carlo driver for empirical size and power.
//!
//! Each replication draws from its own ChaCha8 stream seeded with
//! `mix(seed, study, a, rep)` (SplitMix64 finalizer chained over the words),
//! so tables do not depend on thread count or scheduling.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid::{hybrid_test, TestConfig, TestOutcome};
use crate::io::fmt_f64;
use crate::linalg::{cholesky, Matrix};
use crate::model::{model_by_name, Dataset};

/// Covariate covariance structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Covariance {
    Identity,
    /// `Σ̃ᵢⱼ = 0.5^|i−j|`.
    #[serde(rename = "ar")]
    ArHalf,
}

impl Covariance {
    pub fn label(self) -> &'static str {
        match self {
            Covariance::Identity => "identity",
            Covariance::ArHalf => "ar",
        }
    }

    pub fn matrix(self, p: usize) -> Matrix<f64> {
        let mut m = Matrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                m[(i, j)] = match self {
                    Covariance::Identity => f64::from(u8::from(i == j)),
                    Covariance::ArHalf => 0.5f64.powi((i as i32 - j as i32).abs()),
                };
            }
        }
        m
    }
}

impl std::str::FromStr for Covariance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "id" | "independent" => Ok(Covariance::Identity),
            "ar" | "ar_half" | "dependent" => Ok(Covariance::ArHalf),
            _ => Err(Error::Config(format!("unknown covariance `{s}` (expected identity or ar)"))),
        }
    }
}

/// Zero-mean Gaussian sampler with a cached Cholesky factor.
#[derive(Debug, Clone)]
pub struct MvnSampler {
    p: usize,
    factor: Option<Matrix<f64>>,
}

impl MvnSampler {
    pub fn new(p: usize, covariance: Covariance) -> Self {
        let factor = match covariance {
            Covariance::Identity => None,
            Covariance::ArHalf => Some(cholesky(&covariance.matrix(p), 1e-14).expect("AR(0.5) covariance is positive definite")),
        };
        Self { p, factor }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.p).map(|_| rng.sample(StandardNormal)).collect();
        match &self.factor {
            None => z,
            Some(l) => (0..self.p).map(|i| (0..=i).map(|k| l[(i, k)] * z[k]).sum()).collect(),
        }
    }
}

/// One draw of `X ~ N(0, Σ)`.
pub fn mvn_sample<R: Rng + ?Sized>(rng: &mut R, sampler: &MvnSampler) -> Vec<f64> {
    sampler.sample(rng)
}

/// One grid point of a simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub study: u8,
    pub n: usize,
    pub p: usize,
    pub a: f64,
    pub covariance: Covariance,
    pub null_family: String,
}

impl StudySpec {
    /// Grid point with the study's default fitted family.
    pub fn new(study: u8, n: usize, p: usize, a: f64, covariance: Covariance) -> Result<Self> {
        let null_family = default_null_family(study)?.to_string();
        let spec = Self { study, n, p, a, covariance, null_family };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self.study {
            1 | 2 => {
                if self.p < 2 || self.p % 2 != 0 {
                    return bad(format!("study {} needs an even p >= 2, got {}", self.study, self.p));
                }
            }
            3 => {
                if self.p != 8 {
                    return bad(format!("study 3 needs p = 8, got {}", self.p));
                }
            }
            4 => {
                if self.p < 6 {
                    return bad(format!("study 4 needs p >= 6, got {}", self.p));
                }
            }
            s => return bad(format!("unknown study {s}")),
        }
        if self.study != 1 && self.covariance != Covariance::Identity {
            return bad(format!("study {} uses identity covariance only", self.study));
        }
        if self.n < self.p + 2 {
            return bad(format!("n = {} is too small for p = {}", self.n, self.p));
        }
        if !self.a.is_finite() {
            return bad("departure magnitude must be finite".into());
        }
        Ok(())
    }
}

/// Fitted family for each study.
pub fn default_null_family(study: u8) -> Result<&'static str> {
    match study {
        1 | 3 => Ok("exp-index"),
        2 => Ok("quadratic-index"),
        4 => Ok("study4"),
        s => Err(Error::Config(format!("unknown study {s}"))),
    }
}

/// `α = (1,…,1,0,…,0)/√(p/2)`.
pub fn alpha(p: usize) -> Vec<f64> {
    let s = (p as f64 / 2.0).sqrt();
    (0..p).map(|i| if i < p / 2 { 1.0 / s } else { 0.0 }).collect()
}

/// `β = (0,…,0,1,…,1)/√(p/2)`.
pub fn beta(p: usize) -> Vec<f64> {
    let s = (p as f64 / 2.0).sqrt();
    (0..p).map(|i| if i >= p / 2 { 1.0 / s } else { 0.0 }).collect()
}

/// `C/‖C‖` with `C = (1, 1/2, 1/3, 1, 1)`.
pub fn study4_coefficients() -> [f64; 5] {
    let c = [1.0, 0.5, 1.0 / 3.0, 1.0, 1.0];
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    c.map(|v| v / norm)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean function under the null.
pub fn null_mean(study: u8, x: &[f64]) -> f64 {
    let p = x.len();
    match study {
        1 => 0.25 * (2.0 * dot(&alpha(p), x)).exp(),
        2 => {
            let u = dot(&alpha(p), x);
            u + 0.8 * u * u
        }
        3 => 0.25 * (2.0 * x[0]).exp(),
        4 => {
            let c = study4_coefficients();
            c[0] * x[0] + c[1] * x[1] * x[1] + c[2] * x[2].powi(3) + c[3] * x[3] * x[4] + c[4] * x[5].sin()
        }
        _ => unreachable!("study validated"),
    }
}

/// Departure term multiplied by `a`.
pub fn departure(study: u8, x: &[f64]) -> f64 {
    let p = x.len();
    match study {
        1 => dot(&beta(p), x).sin(),
        2 => dot(&beta(p), x).tanh(),
        3 => {
            0.5 * x[1].powi(3) + x[2].cos() + x[3] - x[4].abs() + (0.6 * std::f64::consts::PI * x[5]).tanh()
                + x[6] * x[7]
        }
        4 => 0.2 * x[0] * x[0] + 0.3 * x[1].powi(3),
        _ => unreachable!("study validated"),
    }
}

/// Draws a dataset of `spec.n` rows with `ε ~ N(0, 1)`.
pub fn generate<R: Rng + ?Sized>(spec: &StudySpec, rng: &mut R) -> Result<Dataset<f64>> {
    spec.validate()?;
    let sampler = MvnSampler::new(spec.p, spec.covariance);
    generate_with(spec, &sampler, rng)
}

fn generate_with<R: Rng + ?Sized>(spec: &StudySpec, sampler: &MvnSampler, rng: &mut R) -> Result<Dataset<f64>> {
    let mut xs = Vec::with_capacity(spec.n * spec.p);
    let mut ys = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let x = sampler.sample(rng);
        let eps: f64 = rng.sample(StandardNormal);
        let mut y = null_mean(spec.study, &x) + eps;
        if spec.a != 0.0 {
            y += spec.a * departure(spec.study, &x);
        }
        ys.push(y);
        xs.extend(x);
    }
    Dataset::new(Matrix::from_row_major(spec.n, spec.p, xs)?, ys)
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Replication seed `mix(seed, study, a, rep)`.
pub fn replication_seed(seed: u64, study: u8, a: f64, rep: usize) -> u64 {
    [u64::from(study), a.to_bits(), rep as u64].iter().fold(splitmix(seed), |h, &w| splitmix(h ^ w))
}

/// Per-replication record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub rep: usize,
    pub seed: u64,
    pub q_hat: usize,
    pub t_n: f64,
    pub p_value: f64,
    pub zheng_p_value: Option<f64>,
}

/// Runs one generate → test cycle.
pub fn run_replication(spec: &StudySpec, sampler: &MvnSampler, seed: u64, rep: usize, config: &TestConfig<f64>) -> Result<TestOutcome<f64>> {
    let rep_seed = replication_seed(seed, spec.study, spec.a, rep);
    let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
    let data = generate_with(spec, sampler, &mut rng)?;
    let model = model_by_name::<f64>(&spec.null_family, spec.p)?;
    let mut cfg = config.clone();
    cfg.fit.seed = splitmix(rep_seed ^ 0x5eed_f17);
    hybrid_test(&data, &model, &cfg)
}

/// All replications of one grid point, in replication order.
pub fn simulate_replications(
    spec: &StudySpec,
    replications: usize,
    seed: u64,
    config: &TestConfig<f64>,
) -> Result<Vec<Result<Replication>>> {
    spec.validate()?;
    let sampler = MvnSampler::new(spec.p, spec.covariance);
    Ok((0..replications)
        .into_par_iter()
        .map(|rep| {
            run_replication(spec, &sampler, seed, rep, config).map(|o| Replication {
                rep,
                seed: replication_seed(seed, spec.study, spec.a, rep),
                q_hat: o.q_hat,
                t_n: o.t_n,
                p_value: o.p_value,
                zheng_p_value: o.zheng.map(|z| z.p_value),
            })
        })
        .collect())
}

/// Aggregated results for one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub study: u8,
    pub n: usize,
    pub p: usize,
    pub a: f64,
    pub covariance: Covariance,
    pub null_family: String,
    /// Completed replications; failures are excluded and counted separately.
    pub replications: usize,
    pub failures: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub zheng_rejections: usize,
    pub zheng_rejection_rate: f64,
    /// Counts of `q̂ = 0, 1, …, p`.
    pub q_hat_histogram: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub seed: u64,
    pub level: f64,
    pub requested_replications: usize,
    pub rows: Vec<PowerRow>,
}

/// Empirical rejection rates over a grid of study specifications.
///
/// A grid point fails the run when more than 5% of its replications error.
pub fn run_study(
    grid: &[StudySpec],
    replications: usize,
    level: f64,
    seed: u64,
    config: &TestConfig<f64>,
) -> Result<PowerTable> {
    if replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::Config(format!("level must lie in (0, 1], got {level}")));
    }
    let mut cfg = config.clone();
    cfg.zheng = true;
    let mut rows = Vec::with_capacity(grid.len());
    for spec in grid {
        let reps = simulate_replications(spec, replications, seed, &cfg)?;
        rows.push(aggregate(spec, &reps, level)?);
    }
    Ok(PowerTable { seed, level, requested_replications: replications, rows })
}

fn aggregate(spec: &StudySpec, reps: &[Result<Replication>], level: f64) -> Result<PowerRow> {
    let mut histogram = vec![0usize; spec.p + 1];
    let (mut done, mut rejections, mut zheng_rejections) = (0usize, 0usize, 0usize);
    let mut failures = Vec::new();
    for r in reps {
        match r {
            Ok(rep) => {
                done += 1;
                histogram[rep.q_hat] += 1;
                rejections += usize::from(rep.p_value <= level);
                zheng_rejections += usize::from(rep.zheng_p_value.is_some_and(|pv| pv <= level));
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    if failures.len() * 20 > reps.len() {
        return Err(Error::SimulationFailures {
            failures: failures.len(),
            replications: reps.len(),
            first: failures[0].clone(),
        });
    }
    let rate = |k: usize| if done == 0 { 0.0 } else { k as f64 / done as f64 };
    Ok(PowerRow {
        study: spec.study,
        n: spec.n,
        p: spec.p,
        a: spec.a,
        covariance: spec.covariance,
        null_family: spec.null_family.clone(),
        replications: done,
        failures: failures.len(),
        rejections,
        rejection_rate: rate(rejections),
        zheng_rejections,
        zheng_rejection_rate: rate(zheng_rejections),
        q_hat_histogram: histogram,
    })
}

impl PowerTable {
    /// One row per grid point; floats carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "study,n,p,covariance,a,null_family,replications,failures,rejections,rejection_rate,zheng_rejection_rate,q_hat_zero_rate\n",
        );
        for r in &self.rows {
            let q0 = if r.replications == 0 { 0.0 } else { r.q_hat_histogram[0] as f64 / r.replications as f64 };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.study,
                r.n,
                r.p,
                r.covariance.label(),
                fmt_f64(r.a),
                r.null_family,
                r.replications,
                r.failures,
                r.rejections,
                fmt_f64(r.rejection_rate),
                fmt_f64(r.zheng_rejection_rate),
                fmt_f64(q0),
            );
        }
        out
    }

    /// `a` against the rejection rate of each test, for plotting.
    pub fn power_curve_csv(&self) -> String {
        let mut out = String::from("study,n,p,covariance,a,T_n,T_Zh\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.study,
                r.n,
                r.p,
                r.covariance.label(),
                fmt_f64(r.a),
                fmt_f64(r.rejection_rate),
                fmt_f64(r.zheng_rejection_rate)
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_vectors() {
        assert_eq!(alpha(2), vec![1.0, 0.0]);
        assert_eq!(beta(2), vec![0.0, 1.0]);
        for p in [2, 4, 8] {
            assert!((dot(&alpha(p), &alpha(p)) - 1.0).abs() < 1e-15);
            assert!((dot(&beta(p), &beta(p)) - 1.0).abs() < 1e-15);
        }
        let c = study4_coefficients();
        assert!((c.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(StudySpec::new(1, 200, 3, 0.0, Covariance::Identity).is_err());
        assert!(StudySpec::new(2, 200, 2, 0.0, Covariance::ArHalf).is_err());
        assert!(StudySpec::new(3, 200, 6, 0.0, Covariance::Identity).is_err());
        assert!(StudySpec::new(4, 200, 5, 0.0, Covariance::Identity).is_err());
        assert!(StudySpec::new(5, 200, 8, 0.0, Covariance::Identity).is_err());
        assert!(StudySpec::new(4, 200, 6, 0.0, Covariance::Identity).is_ok());
        assert!(StudySpec::new(1, 200, 8, 0.2, Covariance::ArHalf).is_ok());
    }

    #[test]
    fn null_generation_is_the_null_mean_plus_noise() {
        for (study, p) in [(1u8, 2usize), (2, 4), (3, 8), (4, 6)] {
            let spec = StudySpec::new(study, 50, p, 0.0, Covariance::Identity).unwrap();
            let data = generate(&spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
            // replay the stream: x then ε per row
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let sampler = MvnSampler::new(p, Covariance::Identity);
            for i in 0..50 {
                let x = sampler.sample(&mut rng);
                let eps: f64 = rng.sample(StandardNormal);
                assert_eq!(data.x.row(i), x.as_slice());
                assert_eq!(data.y[i], null_mean(study, &x) + eps);
            }
        }
    }

    #[test]
    fn sampler_is_deterministic() {
        let s = MvnSampler::new(4, Covariance::ArHalf);
        let a: Vec<Vec<f64>> = (0..5).scan(ChaCha8Rng::seed_from_u64(1), |r, _| Some(s.sample(r))).collect();
        let b: Vec<Vec<f64>> = (0..5).scan(ChaCha8Rng::seed_from_u64(1), |r, _| Some(s.sample(r))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn seeds_differ_across_keys() {
        let base = replication_seed(7, 1, 0.2, 0);
        assert_ne!(base, replication_seed(7, 1, 0.2, 1));
        assert_ne!(base, replication_seed(7, 2, 0.2, 0));
        assert_ne!(base, replication_seed(7, 1, 0.4, 0));
        assert_ne!(base, replication_seed(8, 1, 0.2, 0));
        assert_eq!(base, replication_seed(7, 1, 0.2, 0));
    }

    #[test]
    fn level_one_always_rejects_and_bad_inputs() {
        let spec = StudySpec::new(1, 60, 2, 0.0, Covariance::ArHalf).unwrap();
        let t = run_study(&[spec.clone()], 8, 1.0, 3, &TestConfig::default()).unwrap();
        assert_eq!(t.rows[0].rejection_rate, 1.0);
        assert_eq!(t.rows[0].q_hat_histogram.iter().sum::<usize>(), t.rows[0].replications);
        assert!(run_study(&[spec.clone()], 0, 0.05, 3, &TestConfig::default()).is_err());
        assert!(run_study(&[spec], 4, 0.0, 3, &TestConfig::default()).is_err());
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let spec = StudySpec::new(2, 60, 2, 0.5, Covariance::Identity).unwrap();
        let t = run_study(&[spec], 4, 0.05, 11, &TestConfig::default()).unwrap();
        assert_eq!(t.to_csv().lines().count(), 2);
        assert!(t.power_curve_csv().starts_with("study,n,p,covariance,a,T_n,T_Zh\n"));
    }
}
