//! Sample moments and the Kolmogorov distance to the standard normal law.

use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confidence level of the DKW band attached to every report.
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Sample law of a replicated statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    pub sorted_values: Vec<f64>,
    pub mean: f64,
    /// Unbiased; zero for a single value.
    pub variance: f64,
    pub fourth_central_moment: f64,
}

impl EmpiricalDistribution {
    /// Moments are accumulated in the given order, so identical inputs give
    /// bit-identical moments.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Degenerate("no values".into()));
        }
        let r = values.len() as f64;
        let mean = values.iter().sum::<f64>() / r;
        let (mut m2, mut m4) = (0.0, 0.0);
        for v in values {
            let c = v - mean;
            let c2 = c * c;
            m2 += c2;
            m4 += c2 * c2;
        }
        let variance = if values.len() > 1 { m2 / (r - 1.0) } else { 0.0 };
        let mut sorted_values = values.to_vec();
        sorted_values.sort_unstable_by(f64::total_cmp);
        Ok(Self {
            sorted_values,
            mean,
            variance,
            fourth_central_moment: m4 / r,
        })
    }

    pub fn len(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_values.is_empty()
    }

    /// Standard error of the mean.
    pub fn standard_error(&self) -> f64 {
        (self.variance / self.len() as f64).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.sorted_values[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted_values[self.len() - 1]
    }
}

/// Which moments standardize `V_N` into `W_N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Standardization {
    /// Supplied (true) mean and variance.
    OracleMoments,
    /// Sample mean and variance; adds an O(R^{-1/2}) self-standardization error.
    SampleMoments,
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Half-width of the Dvoretzky–Kiefer–Wolfowitz band, `√(ln(2/δ) / (2R))`
/// with `δ = 1 − confidence`.
pub fn dkw_radius(replications: usize, confidence: f64) -> f64 {
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * replications as f64)).sqrt()
}

/// `sup_t |F_R(t) − Φ(t)|` for sorted standardized values:
/// `max_k max(k/R − Φ(w_(k)), Φ(w_(k)) − (k−1)/R)`.
pub fn kolmogorov_statistic(sorted: &[f64]) -> f64 {
    let r = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let phi = normal_cdf(w);
            ((k + 1) as f64 / r - phi).max(phi - k as f64 / r)
        })
        .fold(0.0, f64::max)
}

/// Kolmogorov-distance estimate for the standardized statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub empirical_dk: f64,
    pub dkw_radius: f64,
    pub confidence: f64,
    pub standardization: Standardization,
    pub mean_used: f64,
    pub variance_used: f64,
    pub replications: usize,
    /// Theoretical bound on the distance, when one was attached.
    pub theoretical_bound: Option<f64>,
    /// `|sample mean − oracle mean|`, when an oracle mean was supplied.
    pub mean_abs_error: Option<f64>,
    /// `sample variance / oracle variance`, when an oracle variance was supplied.
    pub variance_ratio: Option<f64>,
}

impl CltReport {
    pub fn with_theoretical_bound(mut self, bound: f64) -> Self {
        self.theoretical_bound = Some(bound);
        self
    }

    /// Recomputes the DKW band at another confidence level in `(0, 1)`.
    pub fn with_confidence(mut self, confidence: f64) -> Result<Self> {
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(Error::Domain {
                what: "confidence",
                value: confidence,
                domain: "(0, 1)",
            });
        }
        self.confidence = confidence;
        self.dkw_radius = dkw_radius(self.replications, confidence);
        Ok(self)
    }
}

/// Standardizes the sample and measures its Kolmogorov distance to N(0, 1).
///
/// Oracle moments are required in [`Standardization::OracleMoments`] mode;
/// in sample mode they are only used for the error diagnostics.
pub fn kolmogorov_distance(
    dist: &EmpiricalDistribution,
    mode: Standardization,
    oracle_mean: Option<f64>,
    oracle_var: Option<f64>,
) -> Result<CltReport> {
    let (mean, var) = match mode {
        Standardization::OracleMoments => match (oracle_mean, oracle_var) {
            (Some(m), Some(v)) => (m, v),
            _ => {
                return Err(Error::InvalidParameter(
                    "oracle standardization needs both an oracle mean and variance".into(),
                ))
            }
        },
        Standardization::SampleMoments => (dist.mean, dist.variance),
    };
    if mode == Standardization::SampleMoments && dist.min() == dist.max() {
        return Err(Error::Degenerate("all values are equal".into()));
    }
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::Degenerate(format!("standardizing variance is {var}")));
    }
    let sd = var.sqrt();
    // Standardization is monotone, so the sorted order carries over.
    let w: Vec<f64> = dist.sorted_values.iter().map(|v| (v - mean) / sd).collect();
    Ok(CltReport {
        empirical_dk: kolmogorov_statistic(&w),
        dkw_radius: dkw_radius(dist.len(), DEFAULT_CONFIDENCE),
        confidence: DEFAULT_CONFIDENCE,
        standardization: mode,
        mean_used: mean,
        variance_used: var,
        replications: dist.len(),
        theoretical_bound: None,
        mean_abs_error: oracle_mean.map(|m| (dist.mean - m).abs()),
        variance_ratio: oracle_var.map(|v| dist.variance / v),
    })
}

/// Variance with the Monte Carlo sampling noise removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Denoised {
    pub variance: f64,
    /// The correction exceeded the raw variance and the result was floored at 0.
    pub floored: bool,
}

/// `raw − mean (1 − mean) / M`, floored at zero. `M = 0` marks an exact
/// evaluator and returns `raw` unchanged.
///
/// The law of total variance gives `Var(V̂) = Var(V_N) + E[V_N(1 − V_N)]/M`;
/// `mean (1 − mean)` stands in for `E[V_N(1 − V_N)]` to first order.
pub fn variance_denoise(raw_variance: f64, mean: f64, mc_points: u64) -> Denoised {
    if mc_points == 0 {
        return Denoised {
            variance: raw_variance,
            floored: false,
        };
    }
    let corrected = raw_variance - mean * (1.0 - mean) / mc_points as f64;
    Denoised {
        variance: corrected.max(0.0),
        floored: corrected < 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn moments_of_small_sample() {
        let d = EmpiricalDistribution::from_values(&[3.0, 1.0, 2.0, 6.0]).unwrap();
        assert_eq!(d.sorted_values, vec![1.0, 2.0, 3.0, 6.0]);
        assert_eq!(d.mean, 3.0);
        assert_abs_diff_eq!(d.variance, 14.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            d.fourth_central_moment,
            (16.0 + 1.0 + 0.0 + 81.0) / 4.0,
            epsilon = 1e-14
        );
        assert!(EmpiricalDistribution::from_values(&[]).is_err());
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_abs_diff_eq!(normal_cdf(1.0), 0.841_344_746_068_542_9, epsilon = 1e-15);
        assert_abs_diff_eq!(normal_cdf(-1.959_963_984_540_054), 0.025, epsilon = 1e-15);
        assert_abs_diff_eq!(normal_cdf(-8.0), 6.220_960_574_271_785e-16, epsilon = 1e-28);
    }

    #[test]
    fn single_point_at_zero_is_half_away() {
        let d = EmpiricalDistribution::from_values(&[0.0]).unwrap();
        let r = kolmogorov_distance(&d, Standardization::OracleMoments, Some(0.0), Some(1.0)).unwrap();
        assert_eq!(r.empirical_dk, 0.5);
    }

    #[test]
    fn single_atom_is_degenerate() {
        let d = EmpiricalDistribution::from_values(&[0.7; 10]).unwrap();
        assert!(matches!(
            kolmogorov_distance(&d, Standardization::SampleMoments, None, None),
            Err(Error::Degenerate(_))
        ));
        assert!(kolmogorov_distance(&d, Standardization::OracleMoments, Some(0.7), None).is_err());
    }

    #[test]
    fn dkw_radius_reference() {
        assert_abs_diff_eq!(dkw_radius(100_000, 0.95), 0.004_294_694, epsilon = 1e-8);
    }

    #[test]
    fn denoise_examples() {
        assert_eq!(variance_denoise(0.01, 0.6, 0).variance, 0.01);
        let d = variance_denoise(1e-6, 0.5, 1000);
        assert_eq!(d.variance, 0.0);
        assert!(d.floored);
        let d = variance_denoise(1e-3, 0.5, 1000);
        assert_abs_diff_eq!(d.variance, 1e-3 - 2.5e-4, epsilon = 1e-18);
        assert!(!d.floored);
    }
}
