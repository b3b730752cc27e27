use rand::Rng;

use super::{CapConfiguration, CoverageIndex, CoverageValue, VolumeEvaluator};
use crate::error::{Error, Result};
use crate::sphere::fill_uniform_direction;

/// Hit-or-miss estimate of the covered volume from `m` uniform points.
///
/// Given the configuration, the hit count is Binomial(m, V_N), so the
/// estimate is unbiased with conditional variance `V_N (1 − V_N) / m`.
pub fn covered_volume_mc<R: Rng + ?Sized>(config: &CapConfiguration, m: u64, rng: &mut R) -> Result<CoverageValue> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "Monte Carlo sample count must be at least 1".into(),
        ));
    }
    let hits = CoverageIndex::new(config).count_sampled(m, rng);
    Ok(CoverageValue::monte_carlo(hits, m))
}

/// A fixed set of uniform points shared by several volume evaluations.
///
/// Differences `f(Z) − f(Z')` computed on the same points are exact for the
/// empirical measure of the point set, which is what makes replacement
/// differences of size O(1/N) measurable in d ≥ 3.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonPoints {
    d: usize,
    points: Vec<f64>,
}

impl CommonPoints {
    pub fn sample<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        if m == 0 {
            return Err(Error::InvalidParameter(
                "Monte Carlo sample count must be at least 1".into(),
            ));
        }
        let mut points = vec![0.0; d * m];
        for row in points.chunks_exact_mut(d) {
            fill_uniform_direction(row, rng);
        }
        Ok(Self { d, points })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn hits(&self, config: &CapConfiguration) -> Result<u64> {
        if config.params().d() != self.d {
            return Err(Error::WrongDimension {
                expected: self.d,
                actual: config.params().d(),
            });
        }
        Ok(CoverageIndex::new(config).count_covered(&self.points))
    }
}

impl VolumeEvaluator for CommonPoints {
    fn volume(&self, config: &CapConfiguration) -> Result<f64> {
        Ok(self.hits(config)? as f64 / self.len() as f64)
    }
}
