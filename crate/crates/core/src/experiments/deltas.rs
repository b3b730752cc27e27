//! Monte Carlo estimates of the interaction terms
//! `δ₁ = sup E[1{Δ_{1,2}f(Y) ≠ 0} (Δ₁f(Z))⁴]` and
//! `δ₂ = sup E[1{Δ_{1,2}f(Y) ≠ 0, Δ_{1,3}f(Y′) ≠ 0} (Δ₂f(Z))⁴]`
//! and of the plain fourth moment `E[(Δ₁f(X))⁴]`.
//!
//! The supremum runs over recombinations `Y, Y′, Z` of `(X, X′, X̃)` and
//! cannot be enumerated. The estimators evaluate the canonical choice
//! `Y = Y′ = Z = X` and, optionally, a fixed set of random selector triples,
//! reporting the largest mean found. That is a lower bound on the supremum,
//! and every choice is subject to the same upper bound.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::parallel_map;
use crate::coverage::{CapConfiguration, CommonPoints, ExactArcs, ReplacementScheme, Source, VolumeEvaluator};
use crate::error::{Error, Result};
use crate::rng::{domain, stream, StreamFactory};
use crate::sphere::ModelParams;

/// Indicator threshold for exactly computed differences on the circle.
pub(crate) const EXACT_ZERO_TOLERANCE: f64 = 1e-12;

/// Which recombinations the estimators evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum RecombinationPolicy {
    /// `Y = Y′ = Z = X` only.
    Canonical,
    /// The canonical triple plus `count` random selector triples, drawn once
    /// per run and shared by all trials.
    RandomSelectors { count: usize },
}

/// Estimated interaction terms with their standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaMoments {
    pub n: usize,
    pub trials: usize,
    pub policy: RecombinationPolicy,
    /// Common random points per trial; 0 when differences are exact.
    pub mc_points: u64,
    /// Differences with absolute value at or below this count as zero.
    pub indicator_threshold: f64,
    pub delta1_hat: f64,
    pub delta1_se: f64,
    /// `None` when `N < 3`, where `Δ_{1,3}` does not exist.
    pub delta2_hat: Option<f64>,
    pub delta2_se: Option<f64>,
    pub m4_hat: f64,
    pub m4_se: f64,
    /// `δ₁` sample mean for `Y = Z = X`; never above `m4_hat`.
    pub delta1_canonical: f64,
    /// Largest `|Δ₁f(Z)|` seen over all trials and recombinations.
    pub max_abs_delta1: f64,
    /// Fraction of trials with `Δ_{1,2}f(X) ≠ 0`.
    pub nonzero_delta12_fraction: f64,
}

/// Mean and standard error of the mean.
fn mean_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

struct Trial {
    /// Per selector triple: `(δ₁ sample, δ₂ sample)`.
    samples: Vec<(f64, f64)>,
    m4: f64,
    max_abs_delta1: f64,
    nonzero_delta12: bool,
}

/// Estimates `δ₁`, `δ₂` and `E[(Δ₁f(X))⁴]` from `trials` independent draws
/// of `(X, X′, X̃)`.
///
/// On the circle differences are exact. For `d ≥ 3` each trial draws
/// `mc_points` common random points and evaluates every union on them, so
/// differences are exact for that empirical measure; `mc_points = None`
/// selects `256 N`.
pub fn estimate_delta_moments(
    params: &ModelParams,
    trials: usize,
    seed: u64,
    threads: usize,
    policy: RecombinationPolicy,
    mc_points: Option<u64>,
) -> Result<DeltaMoments> {
    let n = params.n();
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "replacement differences need N >= 2, got {n}"
        )));
    }
    let exact = params.d() == 2;
    let points = if exact {
        0
    } else {
        let m = mc_points.unwrap_or(super::DEFAULT_POINTS_PER_CAP * n as u64);
        if m == 0 {
            return Err(Error::InvalidParameter(
                "Monte Carlo sample count must be at least 1".into(),
            ));
        }
        m
    };
    let threshold = if exact {
        EXACT_ZERO_TOLERANCE
    } else {
        0.5 / points as f64
    };

    // Distinct selectors, and (Y, Y′, Z) triples indexing into them.
    let mut selectors = vec![vec![Source::Base; n]];
    let mut triples = vec![[0usize; 3]];
    if let RecombinationPolicy::RandomSelectors { count } = policy {
        let mut rng = stream(seed, domain::SELECTORS, 0);
        for _ in 0..count {
            let mut triple = [0usize; 3];
            for slot in &mut triple {
                let s: Vec<Source> = (0..n).map(|_| Source::random(&mut rng)).collect();
                *slot = match selectors.iter().position(|x| *x == s) {
                    Some(k) => k,
                    None => {
                        selectors.push(s);
                        selectors.len() - 1
                    }
                };
            }
            triples.push(triple);
        }
    }

    let factory = StreamFactory::new(seed, domain::DELTA_MOMENTS);
    let results = parallel_map(threads, trials, |t| {
        let mut rng = factory.stream(t as u64);
        let base = CapConfiguration::sample(*params, &mut rng);
        let primed = CapConfiguration::sample(*params, &mut rng);
        let tilde = CapConfiguration::sample(*params, &mut rng);
        let common = if exact {
            None
        } else {
            Some(CommonPoints::sample(params.d(), points as usize, &mut rng)?)
        };
        let eval: &dyn VolumeEvaluator = match &common {
            Some(c) => c,
            None => &ExactArcs,
        };
        run_trial(&base, &primed, &tilde, &selectors, &triples, eval, threshold)
    })?;

    let k = triples.len();
    let mut best1 = (f64::NEG_INFINITY, 0.0);
    let mut best2 = (f64::NEG_INFINITY, 0.0);
    for s in 0..k {
        let m1 = mean_se(results.iter().map(|r| r.samples[s].0));
        if m1.0 > best1.0 {
            best1 = m1;
        }
        let m2 = mean_se(results.iter().map(|r| r.samples[s].1));
        if m2.0 > best2.0 {
            best2 = m2;
        }
    }
    let (m4_hat, m4_se) = mean_se(results.iter().map(|r| r.m4));
    let has_delta2 = n >= 3;
    Ok(DeltaMoments {
        n,
        trials,
        policy,
        mc_points: points,
        indicator_threshold: threshold,
        delta1_hat: best1.0,
        delta1_se: best1.1,
        delta2_hat: has_delta2.then_some(best2.0),
        delta2_se: has_delta2.then_some(best2.1),
        m4_hat,
        m4_se,
        delta1_canonical: mean_se(results.iter().map(|r| r.samples[0].0)).0,
        max_abs_delta1: results.iter().map(|r| r.max_abs_delta1).fold(0.0, f64::max),
        nonzero_delta12_fraction: results.iter().filter(|r| r.nonzero_delta12).count() as f64 / trials as f64,
    })
}

/// Memoized `f(Z^{S})` for one trial, keyed by selector and by `S` as a
/// bitmask over coordinates 0, 1, 2.
struct Volumes<'a> {
    schemes: Vec<ReplacementScheme>,
    eval: &'a dyn VolumeEvaluator,
    cache: HashMap<(usize, u8), f64>,
}

impl Volumes<'_> {
    fn f(&mut self, sel: usize, mask: u8) -> Result<f64> {
        if let Some(&v) = self.cache.get(&(sel, mask)) {
            return Ok(v);
        }
        let replaced: Vec<usize> = (0..3).filter(|b| mask & (1 << b) != 0).collect();
        let v = self.eval.volume(&self.schemes[sel].replaced(&replaced)?)?;
        self.cache.insert((sel, mask), v);
        Ok(v)
    }

    /// `Δ_i f`, 0-based.
    fn first(&mut self, sel: usize, i: usize) -> Result<f64> {
        Ok(self.f(sel, 0)? - self.f(sel, 1 << i)?)
    }

    /// `Δ_{0,j} f`, 0-based.
    fn second(&mut self, sel: usize, j: usize) -> Result<f64> {
        let bj = 1u8 << j;
        Ok(self.f(sel, 0)? - self.f(sel, 1)? - self.f(sel, bj)? + self.f(sel, 1 | bj)?)
    }
}

fn run_trial(
    base: &CapConfiguration,
    primed: &CapConfiguration,
    tilde: &CapConfiguration,
    selectors: &[Vec<Source>],
    triples: &[[usize; 3]],
    eval: &dyn VolumeEvaluator,
    threshold: f64,
) -> Result<Trial> {
    let n = base.len();
    let schemes = selectors
        .iter()
        .map(|s| ReplacementScheme::new(base.clone(), primed.clone(), tilde.clone(), s.clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut vol = Volumes {
        schemes,
        eval,
        cache: HashMap::new(),
    };
    let nonzero = |x: f64| x.abs() > threshold;

    let mut samples = Vec::with_capacity(triples.len());
    let mut max_abs_delta1: f64 = 0.0;
    for &[y, y_prime, z] in triples {
        let y12 = nonzero(vol.second(y, 1)?);
        let dz1 = vol.first(z, 0)?;
        max_abs_delta1 = max_abs_delta1.max(dz1.abs());
        let s1 = if y12 { dz1.powi(4) } else { 0.0 };
        let s2 = if n >= 3 && y12 && nonzero(vol.second(y_prime, 2)?) {
            vol.first(z, 1)?.powi(4)
        } else {
            0.0
        };
        samples.push((s1, s2));
    }
    // Selector 0 is the canonical `Z = X`.
    let dx1 = vol.first(0, 0)?;
    Ok(Trial {
        samples,
        m4: dx1.powi(4),
        max_abs_delta1,
        nonzero_delta12: nonzero(vol.second(0, 1)?),
    })
}
