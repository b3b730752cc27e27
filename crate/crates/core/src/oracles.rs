//! Closed-form and quadrature ground truth, plus evaluators for the
//! theoretical bounds (variance sandwich, Berry–Esseen plug-in bound for
//! symmetric statistics, convergence rate and admissible dimension).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::composite_gauss_legendre;
use crate::sphere::{cap_measure, ModelParams};

/// Default panel count for [`exact_variance_d2`].
pub const DEFAULT_QUAD_NODES: usize = 4096;

/// Universal constant of the Berry–Esseen bound for symmetric statistics.
pub const SHAO_ZHANG_CONSTANT: f64 = 12.0;

/// Prefactor of the fixed-dimension rate, `72 e^{C₁} c₁ (2/c₁)^d / √N`.
pub const RATE_PREFACTOR: f64 = 72.0;

/// The absolute constants `c₁, c₂ ∈ (0,1)`, `C₁ ∈ (1,2)` of the variance
/// sandwich and the dimension-growth rate `α > 0`.
///
/// No numeric values are known for these; the defaults only serve to draw
/// the shape of the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
    #[serde(rename = "C1")]
    pub big_c1: f64,
    pub alpha: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            c1: 0.25,
            c2: 0.75,
            big_c1: 1.5,
            alpha: 0.2,
        }
    }
}

impl BoundConstants {
    pub fn new(c1: f64, c2: f64, big_c1: f64, alpha: f64) -> Result<Self> {
        let constants = Self { c1, c2, big_c1, alpha };
        constants.validate()?;
        Ok(constants)
    }

    pub fn validate(&self) -> Result<()> {
        let open = |what: &'static str, v: f64, lo: f64, hi: f64, domain: &'static str| {
            if v > lo && v < hi {
                Ok(())
            } else {
                Err(Error::Domain { what, value: v, domain })
            }
        };
        open("c1", self.c1, 0.0, 1.0, "(0, 1)")?;
        open("c2", self.c2, 0.0, 1.0, "(0, 1)")?;
        open("C1", self.big_c1, 1.0, 2.0, "(1, 2)")?;
        open("alpha", self.alpha, 0.0, f64::INFINITY, "(0, inf)")
    }

    /// Supremum of admissible `α`: `1 / (2 ln(2/c₁))`.
    pub fn alpha_limit(&self) -> f64 {
        1.0 / (2.0 * (2.0 / self.c1).ln())
    }

    /// Whether `α` lies in the range where the rate exponent is negative.
    pub fn regime_admissible(&self) -> bool {
        self.alpha < self.alpha_limit()
    }
}

/// `E[V_N] = 1 − (1 − 1/N)^N`, in any dimension.
///
/// Each point of the sphere is missed by one cap with probability `1 − 1/N`;
/// integrate the probability of being covered over the sphere.
pub fn exact_mean(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidCapCount(n));
    }
    Ok(-(n as f64 * (-1.0 / n as f64).ln_1p()).exp_m1())
}

/// Probability that a fixed point is missed by all `N` caps.
fn uncovered_probability(n: usize) -> f64 {
    (n as f64 * (-1.0 / n as f64).ln_1p()).exp()
}

/// Exact `Var(V_N)` on the circle.
///
/// With `U = 1 − V_N` the uncovered fraction,
/// `Var(V_N) = (1/π) ∫_0^π [(1 − 2/N + ov(θ))^N − (1 − 1/N)^{2N}] dθ`,
/// where `ov(θ) = max(0, 2r_N − θ)/(2π)` is the overlap of two arcs whose
/// centers are `θ` apart. The integrand is constant beyond the kink at
/// `θ = 2r_N`; the part below it is integrated with `quad_nodes` panels.
pub fn exact_variance_d2(n: usize, quad_nodes: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("exact variance needs N >= 2, got {n}")));
    }
    if quad_nodes < 64 {
        return Err(Error::InvalidParameter(format!(
            "quad_nodes must be at least 64, got {quad_nodes}"
        )));
    }
    let nf = n as f64;
    let r = PI / nf;
    let q2 = uncovered_probability(n).powi(2);
    let pair_uncovered = |ov: f64| (nf * (ov - 2.0 / nf).ln_1p()).exp();
    let near = composite_gauss_legendre(
        |theta| pair_uncovered((2.0 * r - theta) / (2.0 * PI)) - q2,
        0.0,
        2.0 * r,
        quad_nodes,
    );
    let far = (PI - 2.0 * r) * (pair_uncovered(0.0) - q2);
    Ok((near + far) / PI)
}

/// `p_N = σ(C_{2 r_N})`: the probability that two independent caps meet.
pub fn exact_pn(params: &ModelParams) -> f64 {
    let r2 = (2.0 * params.radius()).min(PI);
    cap_measure(params.d(), r2).expect("radius within [0, pi]")
}

/// Upper bound `2^{d−1} / N` on `p_N`.
pub fn pn_bound(params: &ModelParams) -> f64 {
    2f64.powi(params.d() as i32 - 1) / params.n() as f64
}

/// `12 √N Var^{-1} (√(N δ₁) + N √δ₂ + √m₄)`.
pub fn shao_zhang_bound(n: usize, variance: f64, delta1: f64, delta2: f64, m4: f64) -> Result<f64> {
    if variance.is_nan() || variance <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "variance must be positive, got {variance}"
        )));
    }
    for (what, v) in [("delta1", delta1), ("delta2", delta2), ("m4", m4)] {
        if v.is_nan() || v < 0.0 {
            return Err(Error::InvalidParameter(format!("{what} must be nonnegative, got {v}")));
        }
    }
    let nf = n as f64;
    Ok(SHAO_ZHANG_CONSTANT * nf.sqrt() / variance * ((nf * delta1).sqrt() + nf * delta2.sqrt() + m4.sqrt()))
}

/// Value substituted for `E[(Δ₁f)⁴]` in the closed-form bound, times `N⁴`.
///
/// The first-difference bound gives 1; the closed form below (and the rate
/// constant 72 derived from it) carries the looser 16.
pub const FOURTH_MOMENT_PLUGIN: f64 = 16.0;

/// The bound after substituting `δ₁ ≤ 4p_N/N⁴`, `δ₂ ≤ 16p_N²/N⁴` and
/// `m₄ ≤ 16/N⁴`: `12 Var^{-1} (2√p_N/N + 4p_N/√N + 4/N^{3/2})`.
pub fn shao_zhang_lemma_form(n: usize, variance: f64, p_n: f64) -> f64 {
    let nf = n as f64;
    SHAO_ZHANG_CONSTANT / variance * (2.0 * p_n.sqrt() / nf + 4.0 * p_n / nf.sqrt() + 4.0 / nf.powf(1.5))
}

/// Fixed-dimension and growing-dimension forms of the rate bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBound {
    /// `72 e^{C₁} c₁ (2/c₁)^d N^{−1/2}`.
    pub bound: f64,
    /// `α ln(2/c₁) − 1/2`.
    pub regime_exponent: f64,
    /// `72 e^{C₁} c₁ N^{α ln(2/c₁) − 1/2}`, valid when `d ≤ α ln N`.
    pub regime_bound: f64,
    pub regime_admissible: bool,
}

pub fn rate_bound(params: &ModelParams, constants: &BoundConstants) -> RateBound {
    let BoundConstants { c1, big_c1, alpha, .. } = *constants;
    let nf = params.n() as f64;
    let prefactor = RATE_PREFACTOR * big_c1.exp() * c1;
    let regime_exponent = alpha * (2.0 / c1).ln() - 0.5;
    RateBound {
        bound: prefactor * (2.0 / c1).powi(params.d() as i32) / nf.sqrt(),
        regime_exponent,
        regime_bound: prefactor * nf.powf(regime_exponent),
        regime_admissible: constants.regime_admissible(),
    }
}

/// Largest dimension allowed by `d ≤ α ln N`, never below 2.
pub fn admissible_dimension(n: usize, alpha: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("N must be at least 2, got {n}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    Ok(((alpha * (n as f64).ln()).floor() as usize).max(2))
}

/// `(e^{−C₁} c₁^{d−1} / N, e^{−1} c₂^{d−1} / N)`.
pub fn variance_sandwich(params: &ModelParams, constants: &BoundConstants) -> (f64, f64) {
    let k = params.d() as i32 - 1;
    let nf = params.n() as f64;
    (
        (-constants.big_c1).exp() * constants.c1.powi(k) / nf,
        (-1.0f64).exp() * constants.c2.powi(k) / nf,
    )
}

/// Every theoretical quantity for one `(d, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub d: usize,
    pub n: usize,
    pub p_n: f64,
    pub p_n_bound: f64,
    pub delta1_bound: f64,
    pub delta2_bound: f64,
    pub variance_lower: f64,
    pub variance_upper: f64,
    /// Berry–Esseen bound with the interaction plug-ins, `m₄ = 16/N⁴` and the
    /// variance lower bound.
    pub shao_zhang_bound: f64,
    pub rate_bound: f64,
    pub regime_exponent: f64,
    pub regime_bound: f64,
    pub admissible_dimension: usize,
}

pub fn bound_report(params: &ModelParams, constants: &BoundConstants) -> Result<BoundReport> {
    constants.validate()?;
    let n = params.n();
    let nf = n as f64;
    let p_n = exact_pn(params);
    let delta1_bound = 4.0 * p_n / nf.powi(4);
    let delta2_bound = 16.0 * p_n * p_n / nf.powi(4);
    let (variance_lower, variance_upper) = variance_sandwich(params, constants);
    let shao_zhang = shao_zhang_bound(
        n,
        variance_lower,
        delta1_bound,
        delta2_bound,
        FOURTH_MOMENT_PLUGIN / nf.powi(4),
    )?;
    let rate = rate_bound(params, constants);
    Ok(BoundReport {
        d: params.d(),
        n,
        p_n,
        p_n_bound: pn_bound(params),
        delta1_bound,
        delta2_bound,
        variance_lower,
        variance_upper,
        shao_zhang_bound: shao_zhang,
        rate_bound: rate.bound,
        regime_exponent: rate.regime_exponent,
        regime_bound: rate.regime_bound,
        admissible_dimension: admissible_dimension(n.max(2), constants.alpha)?,
    })
}
