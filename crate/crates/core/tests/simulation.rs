mod common;

use common::*;
use hybridtest::dimension::target_matrix;
use hybridtest::hybrid::TestConfig;
use hybridtest::simulation::{
    generate, replication_seed, run_study, simulate_replications, Covariance, MvnSampler, StudySpec,
};

fn sample_cov(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let p = rows[0].len();
    let mean: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    (0..p)
        .map(|a| (0..p).map(|b| rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n - 1.0)).collect())
        .collect()
}

#[test]
fn ar_sampler_has_the_target_covariance() {
    let p = 4;
    let sampler = MvnSampler::new(p, Covariance::ArHalf);
    let mut g = rng(2024);
    let rows: Vec<Vec<f64>> = (0..40_000).map(|_| sampler.sample(&mut g)).collect();
    let cov = sample_cov(&rows);
    for a in 0..p {
        for b in 0..p {
            let target = 0.5f64.powi((a as i32 - b as i32).abs());
            assert!((cov[a][b] - target).abs() < 0.03, "({a},{b}) {} vs {target}", cov[a][b]);
        }
    }
}

#[test]
fn identity_sampler_is_uncorrelated() {
    let sampler = MvnSampler::new(3, Covariance::Identity);
    let mut g = rng(5);
    let rows: Vec<Vec<f64>> = (0..40_000).map(|_| sampler.sample(&mut g)).collect();
    let cov = sample_cov(&rows);
    for a in 0..3 {
        for b in 0..3 {
            let target = if a == b { 1.0 } else { 0.0 };
            assert!((cov[a][b] - target).abs() < 0.03);
        }
    }
}

#[test]
fn independent_residuals_give_a_small_target_matrix() {
    let mut g = rng(77);
    let x = normal_matrix(&mut g, 2000, 3);
    let r = normal_vec(&mut g, 2000);
    let m = target_matrix(&x, &r).unwrap();
    assert!(m.eigenvalues[0] < 0.05, "{:?}", m.eigenvalues);
}

#[test]
fn single_index_residuals_give_rank_one() {
    let mut g = rng(78);
    let x = normal_matrix(&mut g, 1000, 3);
    let r = x.column(0);
    let m = target_matrix(&x, &r).unwrap();
    assert!(m.eigenvalues[0] > 0.1);
    assert!(m.eigenvalues[1] < 0.05 * m.eigenvalues[0], "{:?}", m.eigenvalues);
}

#[test]
fn null_target_matrix_shrinks_with_n() {
    let median_top = |n: usize| {
        let mut tops: Vec<f64> = (0..100)
            .map(|k| {
                let mut g = rng(1000 + k + n as u64);
                let x = normal_matrix(&mut g, n, 2);
                let r = normal_vec(&mut g, n);
                target_matrix(&x, &r).unwrap().eigenvalues[0]
            })
            .collect();
        tops.sort_by(f64::total_cmp);
        (tops[49] + tops[50]) / 2.0
    };
    let (small, large) = (median_top(500), median_top(2000));
    assert!(large < 0.25 * small, "{large} vs {small}");
}

#[test]
fn replication_results_are_reproducible() {
    let spec = StudySpec::new(1, 60, 2, 0.5, Covariance::ArHalf).unwrap();
    let cfg = TestConfig::default();
    let a = simulate_replications(&spec, 8, 9, &cfg).unwrap();
    let b = simulate_replications(&spec, 8, 9, &cfg).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.as_ref().unwrap(), y.as_ref().unwrap());
    }
    let seeds: Vec<u64> = (0..8).map(|r| replication_seed(9, 1, 0.5, r)).collect();
    assert_eq!(seeds, a.iter().map(|r| r.as_ref().unwrap().seed).collect::<Vec<_>>());
}

#[test]
fn thread_count_does_not_change_results() {
    let spec = StudySpec::new(2, 60, 2, 0.3, Covariance::Identity).unwrap();
    let cfg = TestConfig::default();
    let pool = |t| rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
    let one = pool(1).install(|| run_study(std::slice::from_ref(&spec), 12, 0.05, 3, &cfg).unwrap());
    let four = pool(4).install(|| run_study(std::slice::from_ref(&spec), 12, 0.05, 3, &cfg).unwrap());
    assert_eq!(one, four);
    assert_eq!(one.to_csv(), four.to_csv());
}

#[test]
fn every_study_generates_and_runs() {
    for (study, p, cov) in [(1, 4, Covariance::Identity), (2, 2, Covariance::Identity), (3, 8, Covariance::Identity), (4, 6, Covariance::Identity)] {
        let spec = StudySpec::new(study, 80, p, 0.5, cov).unwrap();
        let data = generate(&spec, &mut rng(1)).unwrap();
        assert_eq!((data.n(), data.p()), (80, p));
        let table = run_study(&[spec], 4, 0.05, 1, &TestConfig::default()).unwrap();
        let row = &table.rows[0];
        assert_eq!(row.replications + row.failures, 4);
        assert_eq!(row.q_hat_histogram.iter().sum::<usize>(), row.replications);
    }
}
