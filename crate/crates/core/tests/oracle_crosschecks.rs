//! Independent checks of the closed forms and quadratures against other
//! routes: the regularized incomplete beta function, direct sampling, and
//! replicated simulation.

use std::f64::consts::{FRAC_PI_2, PI};

use sphere_cover::experiments::{
    kolmogorov_distance, run_replications, variance_denoise, EmpiricalDistribution, Evaluator, ExperimentPlan,
    Standardization,
};
use sphere_cover::oracles::{exact_mean, exact_pn, exact_variance_d2, DEFAULT_QUAD_NODES};
use sphere_cover::rng::stream;
use sphere_cover::sphere::{cap_measure, geodesic_distance, sample_uniform_sphere};
use sphere_cover::{Cap, ModelParams, Point};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::beta_reg;

#[test]
fn cap_measure_matches_incomplete_beta() {
    // σ(C_r) = ½ I_{sin² r}((d − 1)/2, ½) for r ≤ π/2.
    let mut worst: f64 = 0.0;
    for d in 2..=16 {
        for k in 1..=64 {
            let r = FRAC_PI_2 * k as f64 / 64.0;
            let quad = cap_measure(d, r).unwrap();
            let beta = 0.5 * beta_reg((d as f64 - 1.0) / 2.0, 0.5, r.sin().powi(2));
            worst = worst.max((quad - beta).abs());
            // Mirror half.
            let upper = cap_measure(d, PI - r).unwrap();
            worst = worst.max((upper - (1.0 - beta)).abs());
        }
    }
    assert!(worst <= 1e-12, "max deviation {worst:e}");
}

#[test]
fn sampled_fraction_in_a_cap_matches_its_measure() {
    let m = 1_000_000;
    let mut rng = stream(2024, 99, 0);
    for (d, r) in [(3usize, 1.0f64), (3, 0.2), (5, 0.9)] {
        let cap = Cap::new(sample_uniform_sphere(d, &mut rng).unwrap(), r).unwrap();
        let inside = (0..m)
            .filter(|_| cap.contains(&sample_uniform_sphere(d, &mut rng).unwrap()))
            .count();
        let p = cap_measure(d, r).unwrap();
        if d == 3 {
            assert!((p - (1.0 - r.cos()) / 2.0).abs() < 1e-15);
        }
        let se = (p * (1.0 - p) / m as f64).sqrt();
        let frac = inside as f64 / m as f64;
        assert!((frac - p).abs() <= 4.0 * se, "d = {d} r = {r}: {frac} vs {p}");
    }
}

#[test]
fn intersection_probability_matches_pair_sampling() {
    let pairs = 400_000;
    let mut rng = stream(7, 98, 0);
    for (d, n) in [(2usize, 10usize), (3, 100), (4, 50), (6, 20)] {
        let params = ModelParams::new(d, n).unwrap();
        let hits = (0..pairs)
            .filter(|_| {
                let x = sample_uniform_sphere(d, &mut rng).unwrap();
                let y = sample_uniform_sphere(d, &mut rng).unwrap();
                geodesic_distance(&x, &y) <= 2.0 * params.radius()
            })
            .count();
        let p = exact_pn(&params);
        let se = (p * (1.0 - p) / pairs as f64).sqrt();
        let frac = hits as f64 / pairs as f64;
        assert!((frac - p).abs() <= 4.0 * se, "d = {d} N = {n}: {frac} vs {p}");
    }
}

#[test]
fn exact_moments_match_replicated_circle_simulation() {
    for n in [3usize, 7, 25] {
        let params = ModelParams::new(2, n).unwrap();
        let run = run_replications(&ExperimentPlan::new(params, 200_000, 5)).unwrap();
        let dist = &run.distribution;
        let mean = exact_mean(n).unwrap();
        assert!((dist.mean - mean).abs() <= 4.0 * dist.standard_error(), "N = {n}");
        let var = exact_variance_d2(n, DEFAULT_QUAD_NODES).unwrap();
        let var_se = ((dist.fourth_central_moment - dist.variance.powi(2)) / dist.len() as f64).sqrt();
        assert!(
            (dist.variance - var).abs() <= 4.0 * var_se,
            "N = {n}: {} vs {var}",
            dist.variance
        );
    }
}

#[test]
fn exact_mean_matches_sphere_simulation() {
    for d in [4usize, 6] {
        let params = ModelParams::new(d, 20).unwrap();
        let run = run_replications(&ExperimentPlan::new(params, 20_000, 6)).unwrap();
        let mean = exact_mean(20).unwrap();
        assert!(
            (run.distribution.mean - mean).abs() <= 4.0 * run.distribution.standard_error(),
            "d = {d}"
        );
    }
}

#[test]
fn quantile_sample_is_half_a_step_from_normal() {
    let r = 1000;
    let normal = Normal::standard();
    let values: Vec<f64> = (1..=r)
        .map(|k| normal.inverse_cdf((k as f64 - 0.5) / r as f64))
        .collect();
    let dist = EmpiricalDistribution::from_values(&values).unwrap();
    let report = kolmogorov_distance(&dist, Standardization::OracleMoments, Some(0.0), Some(1.0)).unwrap();
    assert!(report.empirical_dk <= 0.5 / r as f64 + 1e-6, "{}", report.empirical_dk);
    assert!(report.empirical_dk >= 0.5 / r as f64 - 1e-6);
}

#[test]
fn denoised_monte_carlo_variance_matches_exact_circle_variance() {
    let n = 50;
    let params = ModelParams::new(2, n).unwrap();
    let m = 256 * n as u64;
    let plan = ExperimentPlan::new(params, 100_000, 11).with_evaluator(Evaluator::MonteCarlo { points: m });
    let run = run_replications(&plan).unwrap();
    let exact = exact_variance_d2(n, DEFAULT_QUAD_NODES).unwrap();
    let denoised = variance_denoise(run.distribution.variance, run.distribution.mean, m);
    assert!(!denoised.floored);
    let rel = (denoised.variance - exact).abs() / exact;
    assert!(
        rel <= 0.10,
        "de-noised {} vs exact {exact} ({rel:.3})",
        denoised.variance
    );
    // Without the correction the Monte Carlo noise is visible.
    assert!(run.distribution.variance > denoised.variance);
}

#[test]
fn single_point_helpers_agree() {
    let p = Point::from_angle(0.25);
    assert!((p.coords()[0] - 0.25f64.cos()).abs() < 1e-16);
}
