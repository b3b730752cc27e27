//! Property suites for the first-difference bound, the locality of second
//! differences, and the calibration of the Monte Carlo estimator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::deltas::EXACT_ZERO_TOLERANCE;
use super::parallel_map;
use crate::coverage::{
    covered_volume_exact_d2, covered_volume_mc, delta, delta12, CapConfiguration, CommonPoints, ExactArcs,
    ReplacementScheme,
};
use crate::error::{Error, Result};
use crate::rng::{domain, StreamFactory};
use crate::sphere::{caps_intersect, Cap, ModelParams, Point};

/// Retry cap for drawing one scheme with disjoint caps.
pub const LOCALITY_MAX_ATTEMPTS: u64 = 1_000_000;

/// Outcome of the first-difference suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstDifferenceReport {
    pub d: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub trials: usize,
    /// Common random points per trial; 0 on the circle.
    pub mc_points: u64,
    /// Trials where `|Δ_i f(Z)|` exceeded its bound.
    pub violations: usize,
    /// `max N |Δ_i f(Z)|`.
    pub max_scaled_delta: f64,
    /// `max N⁴ (Δ_i f(Z))⁴`; at most 1 whenever the bound holds with `1/N`.
    pub max_scaled_fourth_power: f64,
}

/// Draws `trials` random schemes with `N` uniform in `n_min..=n_max`, a random
/// recombination and a random coordinate `i`, and checks `|Δ_i f(Z)|`.
///
/// On the circle the bound is `1/N + 1e-12`. For `d ≥ 3` each trial uses
/// `mc_points` common random points and the bound is the same argument on
/// their empirical measure: `|Δ_i f(Z)| ≤ max(σ_M(C(Z_i)), σ_M(C(X′_i)))`,
/// which is exact in integer counts.
pub fn first_difference_suite(
    d: usize,
    n_min: usize,
    n_max: usize,
    trials: usize,
    seed: u64,
    threads: usize,
    mc_points: u64,
) -> Result<FirstDifferenceReport> {
    if n_min < 2 || n_max < n_min {
        return Err(Error::InvalidParameter(format!("invalid N range {n_min}..={n_max}")));
    }
    if d > 2 && mc_points == 0 {
        return Err(Error::InvalidParameter(
            "Monte Carlo sample count must be at least 1".into(),
        ));
    }
    let params = (n_min..=n_max)
        .map(|n| ModelParams::new(d, n))
        .collect::<Result<Vec<_>>>()?;
    let factory = StreamFactory::new(seed, domain::FIRST_DIFFERENCE);
    let outcomes = parallel_map(threads, trials, |t| {
        let mut rng = factory.stream(t as u64);
        let p = params[rng.random_range(0..params.len())];
        let n = p.n();
        let scheme = ReplacementScheme::sample(p, &mut rng);
        let i = rng.random_range(0..n);
        let (value, bound) = if d == 2 {
            (delta(&scheme, i, &ExactArcs)?, 1.0 / n as f64 + EXACT_ZERO_TOLERANCE)
        } else {
            let common = CommonPoints::sample(d, mc_points as usize, &mut rng)?;
            let value = delta(&scheme, i, &common)?;
            let m = common.len() as f64;
            let cap_mass = |c: &[f64]| -> Result<f64> {
                let single = CapConfiguration::new(p, vec![Point::new(c.to_vec())?; n])?;
                Ok(common.hits(&single)? as f64 / m)
            };
            let bound = cap_mass(scheme.coordinate(i))?.max(cap_mass(scheme.primed().center(i))?);
            (value, bound + 0.5 / m)
        };
        let scaled = n as f64 * value.abs();
        Ok((value.abs() > bound, scaled))
    })?;
    Ok(FirstDifferenceReport {
        d,
        n_min,
        n_max,
        trials,
        mc_points: if d == 2 { 0 } else { mc_points },
        violations: outcomes.iter().filter(|o| o.0).count(),
        max_scaled_delta: outcomes.iter().map(|o| o.1).fold(0.0, f64::max),
        max_scaled_fourth_power: outcomes.iter().map(|o| o.1.powi(4)).fold(0.0, f64::max),
    })
}

/// Which caps must be disjoint before a locality trial is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisjointnessRule {
    /// `A∩B = A∩B′ = A′∩B = A′∩B′ = ∅`, exactly what the locality statement
    /// assumes.
    CrossPairs,
    /// All six pairs among `A, A′, B, B′` disjoint.
    AllPairs,
}

/// Outcome of the locality suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityReport {
    pub d: usize,
    pub n: usize,
    pub trials: usize,
    pub rule: DisjointnessRule,
    pub mc_points: u64,
    pub tolerance: f64,
    /// Schemes drawn in total, including rejected ones.
    pub attempts: u64,
    pub violations: usize,
    pub max_abs_delta12: f64,
}

/// Rejection-samples schemes whose caps `A = C(Z_i)`, `A′ = C(X′_i)`,
/// `B = C(Z_j)`, `B′ = C(X′_j)` satisfy `rule`, for random distinct `i, j`,
/// and checks `Δ_{i,j} f(Z) = 0`.
///
/// Fails with [`Error::RejectionExhausted`] when a trial needs more than
/// [`LOCALITY_MAX_ATTEMPTS`] draws, as for `N = 2` on the circle.
pub fn locality_suite(
    params: &ModelParams,
    trials: usize,
    seed: u64,
    threads: usize,
    rule: DisjointnessRule,
    mc_points: u64,
) -> Result<LocalityReport> {
    let n = params.n();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("locality needs N >= 2, got {n}")));
    }
    let exact = params.d() == 2;
    if !exact && mc_points == 0 {
        return Err(Error::InvalidParameter(
            "Monte Carlo sample count must be at least 1".into(),
        ));
    }
    let tolerance = if exact {
        EXACT_ZERO_TOLERANCE
    } else {
        0.5 / mc_points as f64
    };
    let r = params.radius();
    let factory = StreamFactory::new(seed, domain::LOCALITY);
    let outcomes = parallel_map(threads, trials, |t| {
        let mut rng = factory.stream(t as u64);
        for attempt in 1..=LOCALITY_MAX_ATTEMPTS {
            let scheme = ReplacementScheme::sample(*params, &mut rng);
            let i = rng.random_range(0..n);
            let j = (i + rng.random_range(1..n)) % n;
            let cap = |c: &[f64]| Cap::new(Point::new(c.to_vec())?, r);
            let (a, a2) = (cap(scheme.coordinate(i))?, cap(scheme.primed().center(i))?);
            let (b, b2) = (cap(scheme.coordinate(j))?, cap(scheme.primed().center(j))?);
            let cross = [(&a, &b), (&a, &b2), (&a2, &b), (&a2, &b2)]
                .iter()
                .any(|(x, y)| caps_intersect(x, y));
            let rejected = match rule {
                DisjointnessRule::CrossPairs => cross,
                DisjointnessRule::AllPairs => cross || caps_intersect(&a, &a2) || caps_intersect(&b, &b2),
            };
            if rejected {
                continue;
            }
            let value = if exact {
                delta12(&scheme, i, j, &ExactArcs)?
            } else {
                let common = CommonPoints::sample(params.d(), mc_points as usize, &mut rng)?;
                delta12(&scheme, i, j, &common)?
            };
            return Ok((attempt, value.abs()));
        }
        Err(Error::RejectionExhausted(LOCALITY_MAX_ATTEMPTS))
    })?;
    Ok(LocalityReport {
        d: params.d(),
        n,
        trials,
        rule,
        mc_points: if exact { 0 } else { mc_points },
        tolerance,
        attempts: outcomes.iter().map(|o| o.0).sum(),
        violations: outcomes.iter().filter(|o| o.1 > tolerance).count(),
        max_abs_delta12: outcomes.iter().map(|o| o.1).fold(0.0, f64::max),
    })
}

/// Exact-versus-Monte-Carlo calibration on the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub n: usize,
    pub trials: usize,
    pub mc_points: u64,
    pub z_threshold: f64,
    /// Trials with `|V̂ − V| > z_threshold √(V (1 − V) / M)`.
    pub exceedances: usize,
    pub max_abs_z: f64,
}

/// For each trial draws a circle configuration and compares its Monte Carlo
/// estimate from `mc_points` points with the exact arc union, in units of the
/// conditional standard error.
pub fn mc_calibration(
    params: &ModelParams,
    trials: usize,
    mc_points: u64,
    z_threshold: f64,
    seed: u64,
    threads: usize,
) -> Result<CalibrationReport> {
    if params.d() != 2 {
        return Err(Error::WrongDimension {
            expected: 2,
            actual: params.d(),
        });
    }
    let factory = StreamFactory::new(seed, domain::MC_CALIBRATION);
    let z = parallel_map(threads, trials, |t| {
        let mut rng = factory.stream(t as u64);
        let config = CapConfiguration::sample(*params, &mut rng);
        let exact = covered_volume_exact_d2(&config)?.value;
        let mc = covered_volume_mc(&config, mc_points, &mut rng)?.value;
        let se = (exact * (1.0 - exact) / mc_points as f64).sqrt();
        Ok(if se > 0.0 { (mc - exact) / se } else { 0.0 })
    })?;
    Ok(CalibrationReport {
        n: params.n(),
        trials,
        mc_points,
        z_threshold,
        exceedances: z.iter().filter(|z| z.abs() > z_threshold).count(),
        max_abs_z: z.iter().map(|z| z.abs()).fold(0.0, f64::max),
    })
}
