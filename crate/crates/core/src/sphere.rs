//! Points, caps and cap geometry on the unit sphere S^{d-1} ⊂ R^d.
//!
//! Measures are normalized so that the whole sphere has measure 1. A cap of
//! geodesic radius `r` around `x` is the closed set of points whose geodesic
//! distance to `x` is at most `r`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_gauss_kronrod;
use crate::root::brent;

/// Largest allowed deviation of a point's norm from 1.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-12;

/// Accuracy demanded from the radius solver, measured on the cap measure.
pub const RADIUS_SOLVER_TOLERANCE: f64 = 1e-12;

fn check_dimension(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    Ok(())
}

/// A point on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(Vec<f64>);

impl Point {
    /// Wraps coordinates that already have unit norm.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_dimension(coords.len())?;
        let norm = norm(&coords);
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::Domain {
                what: "point norm",
                value: norm,
                domain: "1 ± 1e-12",
            });
        }
        Ok(Self(coords))
    }

    /// Projects a nonzero vector onto the sphere.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self> {
        check_dimension(coords.len())?;
        let n = norm(&coords);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Domain {
                what: "vector norm",
                value: n,
                domain: "(0, inf)",
            });
        }
        coords.iter_mut().for_each(|c| *c /= n);
        Ok(Self(coords))
    }

    /// The point `(cos θ, sin θ)` on the unit circle.
    pub fn from_angle(theta: f64) -> Self {
        Self(vec![theta.cos(), theta.sin()])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn antipode(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Dimension, cap count and the derived cap radius `r_N` with
/// `cap_measure(d, r_N) = 1/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    d: usize,
    n: usize,
    radius: f64,
}

impl ModelParams {
    /// `N = 1` is accepted and gives the cap of radius π covering the sphere.
    pub fn new(d: usize, n: usize) -> Result<Self> {
        check_dimension(d)?;
        if n == 0 {
            return Err(Error::InvalidCapCount(n));
        }
        let radius = if n == 1 {
            PI
        } else {
            cap_radius_for_measure(d, 1.0 / n as f64)?
        };
        Ok(Self { d, n, radius })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Geodesic radius `r_N` of every cap.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Membership threshold on inner products: `⟨p, x⟩ ≥ cos r_N`.
    pub fn cos_radius(&self) -> f64 {
        self.radius.cos()
    }

    /// Normalized measure of a single cap.
    pub fn cap_fraction(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn cap(&self, center: Point) -> Result<Cap> {
        if center.dim() != self.d {
            return Err(Error::WrongDimension {
                expected: self.d,
                actual: center.dim(),
            });
        }
        Cap::new(center, self.radius)
    }
}

/// A closed geodesic cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    center: Point,
    radius: f64,
}

impl Cap {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= PI) {
            return Err(Error::Domain {
                what: "cap radius",
                value: radius,
                domain: "(0, pi]",
            });
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, p: &Point) -> bool {
        geodesic_distance(&self.center, p) <= self.radius
    }

    /// Normalized measure of the cap.
    pub fn measure(&self) -> f64 {
        cap_measure(self.center.dim(), self.radius).expect("cap invariants checked on construction")
    }
}

/// Writes a uniformly distributed unit vector into `out` by normalizing
/// independent standard Gaussians. Allocation-free; used by the hot loops.
#[inline]
pub(crate) fn fill_uniform_direction<R: Rng + ?Sized>(out: &mut [f64], rng: &mut R) {
    loop {
        let mut sq = 0.0;
        for c in out.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *c = g;
            sq += g * g;
        }
        if sq > 0.0 {
            let inv = 1.0 / sq.sqrt();
            out.iter_mut().for_each(|c| *c *= inv);
            return;
        }
    }
}

/// Draws a point from the normalized surface measure on S^{d-1}.
pub fn sample_uniform_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Point> {
    check_dimension(d)?;
    let mut coords = vec![0.0; d];
    fill_uniform_direction(&mut coords, rng);
    Ok(Point(coords))
}

/// `∫_0^π sin^n(t) dt`, by the Wallis recursion.
fn sine_power_total(n: usize) -> f64 {
    let (mut total, start) = if n % 2 == 0 { (PI, 2) } else { (2.0, 3) };
    let mut k = start;
    while k <= n {
        total *= (k - 1) as f64 / k as f64;
        k += 2;
    }
    total
}

/// Measure of a cap of radius `r ≤ π/2`, general dimension.
fn cap_measure_quadrature(d: usize, r: f64) -> f64 {
    let power = (d - 2) as i32;
    let total = sine_power_total(d - 2);
    let partial = adaptive_gauss_kronrod(|t| t.sin().powi(power), 0.0, r, 1e-16 * total, 1e-13);
    partial / total
}

/// Normalized measure of a geodesic cap of radius `r` on S^{d-1}:
/// `∫_0^r sin^{d-2}(t) dt / ∫_0^π sin^{d-2}(t) dt`.
pub fn cap_measure(d: usize, r: f64) -> Result<f64> {
    check_dimension(d)?;
    if !(0.0..=PI).contains(&r) {
        return Err(Error::Domain {
            what: "cap radius",
            value: r,
            domain: "[0, pi]",
        });
    }
    let m = match d {
        2 => r / PI,
        // (1 - cos r) / 2 without cancellation for small r
        3 => (0.5 * r).sin().powi(2),
        _ if r <= FRAC_PI_2 => cap_measure_quadrature(d, r),
        _ => 1.0 - cap_measure_quadrature(d, PI - r),
    };
    Ok(m.clamp(0.0, 1.0))
}

/// Inverts [`cap_measure`]: the radius of a cap of measure `m ∈ (0, 1)`.
pub fn cap_radius_for_measure(d: usize, m: f64) -> Result<f64> {
    check_dimension(d)?;
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::Domain {
            what: "cap measure",
            value: m,
            domain: "(0, 1)",
        });
    }
    if m == 0.5 {
        return Ok(FRAC_PI_2);
    }
    match d {
        2 => return Ok(m * PI),
        3 => return Ok(2.0 * m.sqrt().asin()),
        _ => {}
    }
    let (target, mirrored) = if m > 0.5 { (1.0 - m, true) } else { (m, false) };
    let r = brent(|r| cap_measure_quadrature(d, r) - target, 0.0, FRAC_PI_2, 1e-15, 200)?;
    let residual = (cap_measure_quadrature(d, r) - target).abs();
    if residual > RADIUS_SOLVER_TOLERANCE {
        return Err(Error::Solver(format!(
            "cap radius for measure {m} in d = {d}: residual {residual:e}"
        )));
    }
    Ok(if mirrored { PI - r } else { r })
}

/// Geodesic (great-circle) distance between two points, in `[0, π]`.
///
/// Computed as `2·atan2(|x − y|, |x + y|)`, which stays accurate for nearly
/// equal and nearly antipodal pairs where `acos` of the inner product does not.
pub fn geodesic_distance(x: &Point, y: &Point) -> f64 {
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in x.0.iter().zip(&y.0) {
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    (2.0 * diff.sqrt().atan2(sum.sqrt())).clamp(0.0, PI)
}

/// Closed caps intersect iff their centers are at most `r₁ + r₂` apart.
pub fn caps_intersect(c1: &Cap, c2: &Cap) -> bool {
    geodesic_distance(&c1.center, &c2.center) <= c1.radius + c2.radius
}
